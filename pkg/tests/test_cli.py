import json
import subprocess
import sys

import numpy as np
import pytest

from smd.cli import instance_seed, load_instances, main, parse_args
from smd.core import Trajectory, load_instance, load_trajectory, save_trajectory


@pytest.fixture(scope="module")
def suite_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(["generate", "--families", "empty,basic", "--num-maps", "1", "--robots", "2",
                 "--cases", "2", "--seed", "3", "--out", str(out)]) == 0
    return out


def test_generate_outputs(suite_dir, capsys):
    files = sorted(p.name for p in (suite_dir / "instances").iterdir())
    assert "manifest.json" in files and len(files) == 5
    man = json.loads((suite_dir / "instances" / "manifest.json").read_text())
    assert man["total"] == 4 and set(man["families"]) == {"empty", "basic"}
    run = json.loads((suite_dir / "run.json").read_text())
    assert run["command"] == "generate" and run["seed"] == 3 and run["total"] == 4
    insts, manifest = load_instances(suite_dir / "instances")
    assert [i.instance_id for i in insts] == sorted(i.instance_id for i in insts)
    assert manifest is not None


def test_sample_then_evaluate(suite_dir, tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["sample", "--instances", str(suite_dir / "instances"), "--model", "zero",
                 "--inner-iters", "1", "--out", str(out)]) == 0
    samples = json.loads((out / "samples.json").read_text())
    assert len(samples) == 4
    ev = tmp_path / "e"
    assert main(["evaluate", "--instances", str(suite_dir / "instances"),
                 "--trajectories", str(out / "trajectories"), "--out", str(ev)]) == 0
    report = json.loads((ev / "report.json").read_text())
    by_id = {r["instance_id"]: r for r in report["per_instance"]}
    # a converged projection must pass the default (interpolated) evaluation
    for s in samples:
        if s["projection_converged"]:
            assert by_id[s["instance_id"]]["success"]
    assert (ev / "report.csv").exists() and (ev / "success_rates.csv").exists()
    assert json.loads((out / "run.json").read_text())["projection"]["substeps"] == 4


def test_evaluate_missing_returns_one(suite_dir, tmp_path, capsys):
    tdir = tmp_path / "t"
    tdir.mkdir()
    inst = load_instances(suite_dir / "instances")[0][0]
    save_trajectory(Trajectory.straight_line(inst), tdir / f"{inst.instance_id}.json", inst.instance_id)
    args = ["evaluate", "--instances", str(suite_dir / "instances"), "--trajectories", str(tdir),
            "--out", str(tmp_path / "e")]
    assert main(args) == 1
    assert "without a record" in capsys.readouterr().err
    assert main(args + ["--allow-partial", "--discrete"]) == 0


def test_project_command(suite_dir, tmp_path, capsys):
    path = suite_dir / "instances" / "basic-m00-n2-c00.json"
    inst = load_instance(path)
    noisy = Trajectory.straight_line(inst).positions + 0.05 * np.random.default_rng(0).standard_normal(
        (inst.num_robots, inst.horizon, 2))
    save_trajectory(Trajectory(noisy), tmp_path / "in.json", inst.instance_id)
    out = tmp_path / "p"
    assert main(["project", "--instance", str(path), "--trajectory", str(tmp_path / "in.json"),
                 "--trace", str(tmp_path / "trace.csv"), "--out", str(out)]) == 0
    run = json.loads((out / "run.json").read_text())
    traj, iid = load_trajectory(out / "projected.json")
    assert iid == inst.instance_id and traj.positions.shape == noisy.shape
    assert run["converged"]
    assert (tmp_path / "trace.csv").read_text().splitlines()[0].startswith("k,")
    assert "converged=True" in capsys.readouterr().out


def test_sweep_zeta_command(suite_dir, tmp_path, capsys):
    out = tmp_path / "z"
    assert main(["sweep-zeta", "--instances", str(suite_dir / "instances"), "--families", "basic",
                 "--limit", "1", "--zetas", "1.0,1.09", "--noise", "0.1", "--out", str(out)]) == 0
    summary = json.loads((out / "zeta_summary.json").read_text())
    assert [s["zeta"] for s in summary] == [1.0, 1.09]
    assert (out / "zeta_traces.csv").read_text().startswith("instance_id,zeta,k,")


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"inner_iters": 3, "gamma0": 0.01, "seed": 9}))
    args = parse_args(["sample", "--instances", "x", "--model", "zero", "--config", str(cfg),
                       "--gamma0", "0.02"])
    assert args.inner_iters == 3 and args.seed == 9 and args.gamma0 == 0.02


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SystemExit):
        parse_args(["sample", "--instances", "x", "--model", "zero", "--config", str(cfg)])


def test_instance_seed_is_stable():
    assert instance_seed(0, "a") == instance_seed(0, "a")
    assert instance_seed(0, "a") != instance_seed(0, "b")
    assert instance_seed(0, "a") != instance_seed(1, "a")


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "smd.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("generate", "bootstrap-data", "train", "sample", "project", "evaluate", "sweep-zeta"):
        assert cmd in res.stdout
