import numpy as np
import pytest

from smd.core import make_instance


@pytest.fixture
def swap_instance():
    """Two robots swapping along y = 1; straight lines meet at the midpoint."""
    return make_instance([(0.5, 1.0), (1.5, 1.0)], [(1.5, 1.0), (0.5, 1.0)], radius=0.05,
                         v_max=0.1, horizon=21)


@pytest.fixture
def obstacle_instance():
    return make_instance([(0.2, 1.0)], [(1.8, 1.0)], radius=0.05, v_max=0.1, horizon=40,
                         obstacles=[((1.0, 1.0), 0.1)], map_family="basic")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
