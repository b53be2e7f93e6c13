"""Projection of trajectories onto the MRMP feasible set.

``project_convex`` is an exact Euclidean projection onto the convex part
(fixed endpoints, speed limits, workspace box) computed with Dykstra's
alternating projections. ``project_alm`` handles the separation constraints
through an augmented Lagrangian: slack variables turn each ``g >= 0`` into
``g - d = 0``, the slack is eliminated in closed form, the primal problem is
solved by projected gradient descent over the convex set and the multipliers
follow dual ascent with a geometrically growing penalty.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np
from numba import njit

from .constraints import convex_violation, pair_indices
from .core import ProblemInstance, Trajectory

log = logging.getLogger(__name__)

RHO_OVERFLOW = 1e12


class InfeasibleError(ValueError):
    """The convex set is empty for this instance."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, last: np.ndarray, residual: float):
        super().__init__(msg)
        self.last = last
        self.residual = residual


@dataclass
class InnerSolverConfig:
    step: float = 0.5          # initial step size of projected gradient descent
    max_iters: int = 50
    tol: float = 1e-7          # stop when no coordinate moves more than this


@dataclass
class ProjectionConfig:
    delta_a: float = 1e-4
    delta_o: float = 1e-4
    max_outer_iters: int = 200
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)
    zeta: float = 1.05
    rho_init: float = 1.0
    # separate penalties share rho_init unless set
    rho_a_init: float | None = None
    rho_o_init: float | None = None
    margin: float = 1e-3       # inflation of every separation radius inside the solver
    convex_tol: float = 1e-7
    convex_max_iters: int = 20000
    # seeded perturbation of points that violate a separation constraint at
    # entry and of deeply overlapping points when the outer loop stalls
    jitter: float = 1e-3
    seed: int = 0
    # separation enforced at this many interpolated points per segment (1 = time steps only)
    substeps: int = 1

    def __post_init__(self):
        if isinstance(self.inner, dict):
            self.inner = InnerSolverConfig(**self.inner)
        if self.delta_a <= 0 or self.delta_o <= 0:
            raise ValueError("tolerances must be > 0")
        if self.zeta < 1:
            raise ValueError("zeta must be >= 1")
        if self.rho_init <= 0:
            raise ValueError("rho_init must be > 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @classmethod
    def for_sampling(cls, **overrides) -> ProjectionConfig:
        """Settings used inside the sampler, where a projection runs after every
        Langevin step: a large initial penalty reaches the tolerance in a few
        outer iterations and the inner solve stops at 1e-5 movement. The
        shorter step keeps each gradient step close to the convex set, which
        makes the warm-started Dykstra projections cheap."""
        kw = dict(rho_init=100.0, inner=InnerSolverConfig(step=0.1, tol=1e-5))
        kw.update(overrides)
        return cls(**kw)

    @classmethod
    def from_dict(cls, d: dict) -> ProjectionConfig:
        d = dict(d)
        if "inner" in d:
            d["inner"] = InnerSolverConfig(**d["inner"])
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DualState:
    nu_a: np.ndarray
    nu_o: np.ndarray
    rho_a: float
    rho_o: float
    zeta: float = 1.05
    iteration: int = 0

    def __post_init__(self):
        if self.rho_a <= 0 or self.rho_o <= 0:
            raise ValueError("penalties must be > 0")
        if self.zeta < 1:
            raise ValueError("zeta must be >= 1")

    @classmethod
    def zeros(cls, instance: ProblemInstance, rho: float = 1.0, zeta: float = 1.05,
              substeps: int = 1) -> DualState:
        n = instance.num_robots
        hd = (instance.horizon - 1) * substeps + 1
        na = n * (n - 1) // 2 * hd
        no = n * len(instance.obstacles) * hd
        return cls(np.zeros(na), np.zeros(no), rho, rho, zeta)


@dataclass
class TraceRow:
    k: int
    viol_a: float
    viol_o: float
    rho: float
    objective: float


@dataclass
class ProjectionResult:
    trajectory: Trajectory
    dual: DualState
    converged: bool
    viol_a: float
    viol_o: float
    trace: list[TraceRow]

    def __iter__(self):
        # allows ``traj, dual, converged = project_alm(...)``
        return iter((self.trajectory, self.dual, self.converged))


# ----------------------------------------------------------------------------
# convex projection

@njit(cache=True)
def _project_pair(ax, ay, bx, by, c, fix_a, fix_b):
    """Nearest (a, b) with |b - a| <= c; fixed ends do not move."""
    dx = bx - ax
    dy = by - ay
    n = np.sqrt(dx * dx + dy * dy)
    if n <= c or (fix_a and fix_b):
        return ax, ay, bx, by
    ux = dx / n
    uy = dy / n
    if fix_a:
        return ax, ay, ax + ux * c, ay + uy * c
    if fix_b:
        return bx - ux * c, by - uy * c, bx, by
    mx = 0.5 * (ax + bx)
    my = 0.5 * (ay + by)
    h = 0.5 * c
    return mx - ux * h, my - uy * h, mx + ux * h, my + uy * h


@njit(cache=True)
def _dykstra_kernel(x, p, lim, side, tol, max_iters):
    """Dykstra's algorithm over {even segments, odd segments, box}, in place.

    Segments with the same parity are disjoint, so each of the three sets has
    an exact closed-form projection. ``p`` holds the correction terms; on entry
    ``x + p.sum(0)`` must be the point being projected, which lets a caller
    warm start from the corrections of a nearby projection.
    Returns (iterations, speed residual).
    """
    N, H = x.shape[0], x.shape[1]
    it = 0
    for it in range(1, max_iters + 1):
        moved = 0.0
        for k in range(3):
            for i in range(N):
                if k < 2:
                    for s in range(k, H - 1, 2):
                        ax = x[i, s, 0] + p[k, i, s, 0]
                        ay = x[i, s, 1] + p[k, i, s, 1]
                        bx = x[i, s + 1, 0] + p[k, i, s + 1, 0]
                        by = x[i, s + 1, 1] + p[k, i, s + 1, 1]
                        nax, nay, nbx, nby = _project_pair(ax, ay, bx, by, lim[i], s == 0, s + 1 == H - 1)
                        p[k, i, s, 0] = ax - nax
                        p[k, i, s, 1] = ay - nay
                        p[k, i, s + 1, 0] = bx - nbx
                        p[k, i, s + 1, 1] = by - nby
                        moved = max(moved, abs(nax - x[i, s, 0]), abs(nay - x[i, s, 1]),
                                    abs(nbx - x[i, s + 1, 0]), abs(nby - x[i, s + 1, 1]))
                        x[i, s, 0] = nax
                        x[i, s, 1] = nay
                        x[i, s + 1, 0] = nbx
                        x[i, s + 1, 1] = nby
                else:
                    for h in range(1, H - 1):
                        for d in range(2):
                            v = x[i, h, d] + p[2, i, h, d]
                            w = min(max(v, 0.0), side)
                            p[2, i, h, d] = v - w
                            moved = max(moved, abs(w - x[i, h, d]))
                            x[i, h, d] = w
        if moved < tol and _speed_residual(x, lim) <= tol:
            break
    return it, _speed_residual(x, lim)


@njit(cache=True)
def _speed_residual(x, lim):
    resid = 0.0
    for i in range(x.shape[0]):
        for s in range(x.shape[1] - 1):
            dx = x[i, s + 1, 0] - x[i, s, 0]
            dy = x[i, s + 1, 1] - x[i, s, 1]
            resid = max(resid, np.sqrt(dx * dx + dy * dy) - lim[i])
    return resid


def _dykstra(x: np.ndarray, instance: ProblemInstance, tol: float, max_iters: int,
             corr: np.ndarray | None = None):
    """Project ``x``; ``corr`` (shape (3, N, H, 2)) is a warm start updated in place."""
    x = np.array(x, dtype=np.float64, copy=True)
    x[:, 0] = instance.starts
    x[:, -1] = instance.goals
    if x.shape[1] == 2:
        return x, True, 0.0
    if corr is None:
        corr = np.zeros((3,) + x.shape)
    else:
        x -= corr.sum(axis=0)
    lim = np.ascontiguousarray(instance.step_limits, dtype=np.float64)
    _, resid = _dykstra_kernel(x, corr, lim, instance.workspace_side, tol, max_iters)
    resid = max(0.0, resid)
    return x, resid <= tol, resid


def _require_convex_feasible(instance: ProblemInstance) -> None:
    if not instance.straight_line_feasible():
        raise InfeasibleError(
            "convex set is empty: straight line from start to goal exceeds v_max*dt per step")


def project_convex(point: Trajectory | np.ndarray, instance: ProblemInstance,
                   tol: float = 1e-7, max_iters: int = 20000) -> Trajectory:
    """Euclidean projection onto fixed endpoints + speed limits + workspace box."""
    _require_convex_feasible(instance)
    x = point.positions if isinstance(point, Trajectory) else np.asarray(point, dtype=float)
    if x.shape != (instance.num_robots, instance.horizon, 2):
        raise ValueError(f"shape {x.shape} does not match instance")
    out, ok, resid = _dykstra(x, instance, tol, max_iters)
    if not ok:
        raise ConvergenceError(f"convex projection did not converge (residual {resid:.3g})", out, resid)
    return Trajectory(out)


# ----------------------------------------------------------------------------
# augmented Lagrangian pieces

def eliminate_slack(g, nu, rho):
    """Optimal non-negative slack ``max(0, g + nu / (2 rho))``."""
    if np.any(np.asarray(rho) <= 0):
        raise ValueError("rho must be > 0")
    return np.maximum(0.0, np.asarray(g) + np.asarray(nu) / (2.0 * np.asarray(rho)))


class _Residuals:
    """Separation residuals and their gradients for one instance.

    Radii may be inflated by ``margin``. With ``substeps > 1`` the residuals
    are taken at ``substeps`` linearly interpolated points per segment, the
    same sample times the interpolated collision check uses.
    """

    def __init__(self, instance: ProblemInstance, margin: float = 0.0, substeps: int = 1):
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        self.n = instance.num_robots
        self.H = instance.horizon
        self.pi, self.pj = pair_indices(self.n)
        r = instance.radii
        self.Ra2 = ((r[self.pi] + r[self.pj] + margin) ** 2)[:, None]
        self.centers = instance.obstacle_centers
        self.Ro2 = ((r[:, None] + instance.obstacle_radii[None] + margin) ** 2)[:, :, None]
        self.has_obs = len(instance.obstacles) > 0
        self.W = None
        self.Hd = (self.H - 1) * substeps + 1
        times = np.arange(self.Hd) / substeps
        # sample k lies on segment lo[k] at fraction frac[k]
        self.lo = np.minimum(np.floor(times).astype(np.int64), max(self.H - 2, 0))
        self.frac = times - self.lo
        if substeps > 1:
            self.W = np.zeros((self.Hd, self.H))
            self.W[np.arange(self.Hd), self.lo] = 1.0 - self.frac
            self.W[np.arange(self.Hd), self.lo + 1] += self.frac
        self.obs_centers = np.ascontiguousarray(self.centers.reshape(-1, 2), dtype=np.float64)
        self.Ra2_flat = np.ascontiguousarray(self.Ra2[:, 0])
        self.Ro2_flat = np.ascontiguousarray(self.Ro2[:, :, 0].reshape(self.n, -1))

    def dense(self, x: np.ndarray) -> np.ndarray:
        return x if self.W is None else np.matmul(self.W, x)

    def support(self, mask: np.ndarray) -> np.ndarray:
        """Discrete points (N, H) that contribute to the flagged dense samples (N, Hd)."""
        if self.W is None:
            return mask
        return (mask.astype(float) @ self.W) > 0

    def values(self, x: np.ndarray):
        x = self.dense(x)
        da = x[self.pi] - x[self.pj]
        ga = np.einsum("phk,phk->ph", da, da) - self.Ra2
        if self.has_obs:
            do = x[:, None] - self.centers[None, :, None]
            go = np.einsum("ijhk,ijhk->ijh", do, do) - self.Ro2
        else:
            do = np.zeros((self.n, 0, self.Hd, 2))
            go = np.zeros((self.n, 0, self.Hd))
        return ga, go, da, do

    def pullback(self, wa: np.ndarray, wo: np.ndarray, da: np.ndarray, do: np.ndarray) -> np.ndarray:
        """sum_k w_k * grad g_k with w shaped like the residual arrays."""
        grad = np.zeros((self.n, self.Hd, 2))
        ca = 2.0 * wa[..., None] * da
        np.add.at(grad, self.pi, ca)
        np.add.at(grad, self.pj, -ca)
        if self.has_obs:
            grad += 2.0 * np.einsum("ijh,ijhk->ihk", wo, do)
        return grad if self.W is None else np.matmul(self.W.T, grad)


def _phi(g, nu, rho):
    """Slack-eliminated penalty nu*H + rho*H^2 and its derivative in g."""
    m = np.minimum(0.0, g + nu / (2.0 * rho))
    return rho * m * m - nu * nu / (4.0 * rho), 2.0 * rho * m


def _al_value_grad_reference(x, anchor, nu_a, nu_o, rho_a, rho_o, res: _Residuals, want_grad=True):
    """Vectorised numpy version of ``_al_value_grad``, kept as a cross-check."""
    ga, go, da, do = res.values(x)
    nu_a = nu_a.reshape(ga.shape)
    nu_o = nu_o.reshape(go.shape)
    fa, wa = _phi(ga, nu_a, rho_a)
    fo, wo = _phi(go, nu_o, rho_o)
    diff = x - anchor
    val = float(np.sum(diff * diff) + fa.sum() + fo.sum())
    if not want_grad:
        return val, None
    return val, 2.0 * diff + res.pullback(wa, wo, da, do)


@njit(cache=True)
def _al_kernel(x, anchor, lo, frac, pi, pj, Ra2, centers, Ro2, nu_a, nu_o, rho_a, rho_o,
               grad, want_grad):
    """Augmented Lagrangian value; accumulates the gradient into ``grad`` if asked.

    nu_a is laid out as (pair, sample) and nu_o as (robot, obstacle, sample),
    matching the flattened residual order.
    """
    N, H = x.shape[0], x.shape[1]
    Hd = lo.shape[0]
    No = centers.shape[0]
    val = 0.0
    for i in range(N):
        for h in range(H):
            for d in range(2):
                r = x[i, h, d] - anchor[i, h, d]
                val += r * r
                if want_grad:
                    grad[i, h, d] = 2.0 * r
    for k in range(Hd):
        l0 = lo[k]
        f = frac[k]
        for p in range(pi.shape[0]):
            i = pi[p]
            j = pj[p]
            dx = ((1.0 - f) * x[i, l0, 0] + f * x[i, l0 + 1, 0]) - ((1.0 - f) * x[j, l0, 0] + f * x[j, l0 + 1, 0])
            dy = ((1.0 - f) * x[i, l0, 1] + f * x[i, l0 + 1, 1]) - ((1.0 - f) * x[j, l0, 1] + f * x[j, l0 + 1, 1])
            nu = nu_a[p * Hd + k]
            m = min(0.0, dx * dx + dy * dy - Ra2[p] + nu / (2.0 * rho_a))
            val += rho_a * m * m - nu * nu / (4.0 * rho_a)
            if want_grad and m < 0.0:
                c = 4.0 * rho_a * m
                for w, hh in ((1.0 - f, l0), (f, l0 + 1)):
                    if w != 0.0:
                        grad[i, hh, 0] += c * w * dx
                        grad[i, hh, 1] += c * w * dy
                        grad[j, hh, 0] -= c * w * dx
                        grad[j, hh, 1] -= c * w * dy
        for i in range(N):
            px = (1.0 - f) * x[i, l0, 0] + f * x[i, l0 + 1, 0]
            py = (1.0 - f) * x[i, l0, 1] + f * x[i, l0 + 1, 1]
            for o in range(No):
                dx = px - centers[o, 0]
                dy = py - centers[o, 1]
                nu = nu_o[(i * No + o) * Hd + k]
                m = min(0.0, dx * dx + dy * dy - Ro2[i, o] + nu / (2.0 * rho_o))
                val += rho_o * m * m - nu * nu / (4.0 * rho_o)
                if want_grad and m < 0.0:
                    c = 4.0 * rho_o * m
                    for w, hh in ((1.0 - f, l0), (f, l0 + 1)):
                        if w != 0.0:
                            grad[i, hh, 0] += c * w * dx
                            grad[i, hh, 1] += c * w * dy
    return val


def _al_value_grad(x, anchor, nu_a, nu_o, rho_a, rho_o, res: _Residuals, want_grad=True):
    """Augmented Lagrangian ``|x - anchor|^2 + sum phi(g)`` and its gradient in x."""
    if res.H < 2:
        return _al_value_grad_reference(x, anchor, nu_a, nu_o, rho_a, rho_o, res, want_grad)
    grad = np.empty(x.shape)
    val = _al_kernel(np.ascontiguousarray(x, dtype=np.float64),
                     np.ascontiguousarray(anchor, dtype=np.float64),
                     res.lo, res.frac, res.pi, res.pj, res.Ra2_flat, res.obs_centers,
                     res.Ro2_flat, np.ascontiguousarray(nu_a, dtype=np.float64).ravel(),
                     np.ascontiguousarray(nu_o, dtype=np.float64).ravel(),
                     float(rho_a), float(rho_o), grad, want_grad)
    return float(val), (grad if want_grad else None)


def augmented_lagrangian_value(traj: Trajectory | np.ndarray, anchor: Trajectory | np.ndarray,
                               dual: DualState, instance: ProblemInstance,
                               margin: float = 0.0, return_grad: bool = False,
                               substeps: int = 1):
    """J + nu_a.H_a + nu_o.H_o + rho_a|H_a|^2 + rho_o|H_o|^2 with H = g - d*.

    ``J = |traj - anchor|^2``. The slack d* is eliminated for the given duals,
    which makes the value continuously differentiable in the positions.
    """
    x = traj.positions if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    a = anchor.positions if isinstance(anchor, Trajectory) else np.asarray(anchor, dtype=float)
    if x.shape != a.shape or x.shape != (instance.num_robots, instance.horizon, 2):
        raise ValueError("shape mismatch between trajectory, anchor and instance")
    res = _Residuals(instance, margin, substeps)
    val, grad = _al_value_grad(x, a, dual.nu_a, dual.nu_o, dual.rho_a, dual.rho_o, res, return_grad)
    return (val, grad) if return_grad else val


def slack_residuals(ga, go, dual: DualState):
    """Equality residuals H = g - d* after slack elimination, flattened."""
    Ha = ga.ravel() - eliminate_slack(ga.ravel(), dual.nu_a, dual.rho_a)
    Ho = go.ravel() - eliminate_slack(go.ravel(), dual.nu_o, dual.rho_o)
    return Ha, Ho


# ----------------------------------------------------------------------------
# ALM projection

def _violation(g: np.ndarray) -> float:
    return float(-g.min()) if g.size and g.min() < 0 else 0.0


def _inner_pgd(x, anchor, dual, res, instance, cfg: ProjectionConfig, step0: float):
    """Accelerated projected gradient with backtracking on the augmented Lagrangian.

    Momentum is dropped whenever the objective goes up (adaptive restart), so
    the iterates keep the monotone behaviour of plain projected gradient.
    """
    inner = cfg.inner
    eta = step0
    corr = np.zeros((3,) + x.shape)
    args = (anchor, dual.nu_a, dual.nu_o, dual.rho_a, dual.rho_o, res)
    x_val, _ = _al_value_grad(x, *args, want_grad=False)
    x_prev = x
    theta = 1.0
    for _ in range(inner.max_iters):
        theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        z = x + ((theta - 1.0) / theta_next) * (x - x_prev)
        z_val, grad = _al_value_grad(z, *args)
        while True:
            y, _, _ = _dykstra(z - eta * grad, instance, cfg.convex_tol, cfg.convex_max_iters, corr)
            d = y - z
            y_val, _ = _al_value_grad(y, *args, want_grad=False)
            if y_val <= z_val + np.sum(grad * d) + np.sum(d * d) / (2 * eta) + 1e-15:
                break
            eta *= 0.5
            if eta < 1e-12:
                return x, eta
        moved = np.abs(y - x).max()
        if y_val > x_val:
            # restart from x without momentum
            x_prev, theta = x, 1.0
            continue
        x_prev, x, x_val, theta = x, y, y_val, theta_next
        eta = min(eta * 2.0, inner.step)
        if moved < inner.tol:
            break
    return x, eta


def _jitter_points(x, ga, go, res: _Residuals, instance, cfg: ProjectionConfig, rng,
                   depth: float = 0.0):
    """Perturb the free points involved in a separation violation.

    Only residuals below ``-depth * R^2`` count, so ``depth=0.75`` selects pairs
    closer than half their separation radius.
    """
    bad = np.zeros((x.shape[0], res.Hd), dtype=bool)
    pa, ha = np.nonzero(ga < -depth * res.Ra2)
    bad[res.pi[pa], ha] = True
    bad[res.pj[pa], ha] = True
    io, _, ho = np.nonzero(go < -depth * res.Ro2)
    bad[io, ho] = True
    bad = res.support(bad)
    bad[:, 0] = bad[:, -1] = False
    if not bad.any():
        return x
    noise = rng.standard_normal(x.shape) * cfg.jitter
    y, _, _ = _dykstra(x + noise * bad[..., None], instance, cfg.convex_tol, cfg.convex_max_iters)
    return y


def project_alm(point: Trajectory | np.ndarray, instance: ProblemInstance,
                config: ProjectionConfig | None = None, trace: bool = False,
                dual: DualState | None = None) -> ProjectionResult:
    """Nearest (locally) trajectory satisfying all MRMP constraints.

    Stops once every separation violation is within ``delta_a``/``delta_o``
    or after ``max_outer_iters`` outer iterations; in the latter case the
    least-violating iterate is returned with ``converged=False``.
    """
    cfg = config or ProjectionConfig()
    _require_convex_feasible(instance)
    anchor = point.positions if isinstance(point, Trajectory) else np.asarray(point, dtype=float)
    if anchor.shape != (instance.num_robots, instance.horizon, 2):
        raise ValueError(f"shape {anchor.shape} does not match instance")

    res = _Residuals(instance, cfg.margin, cfg.substeps)
    x, _, _ = _dykstra(anchor, instance, cfg.convex_tol, cfg.convex_max_iters)
    rho_a0 = cfg.rho_a_init or cfg.rho_init
    rho_o0 = cfg.rho_o_init or cfg.rho_init

    ga, go, _, _ = res.values(x)
    rng = np.random.default_rng(cfg.seed)
    if cfg.jitter > 0:
        x = _jitter_points(x, ga, go, res, instance, cfg, rng)
        ga, go, _, _ = res.values(x)
    if dual is None:
        # warm start: multipliers at the residuals of the entry point
        dual = DualState(np.minimum(ga, 0.0).ravel(), np.minimum(go, 0.0).ravel(),
                         rho_a0, rho_o0, cfg.zeta)
    else:
        if dual.nu_a.shape != (ga.size,) or dual.nu_o.shape != (go.size,):
            raise ValueError("dual state does not match instance / substeps")
        dual = DualState(dual.nu_a.copy(), dual.nu_o.copy(), dual.rho_a, dual.rho_o, dual.zeta)

    rows: list[TraceRow] = []
    best = (np.inf, x, 0.0, 0.0)
    converged = False
    step = cfg.inner.step
    va = vo = np.inf
    prev_score = np.inf
    for k in range(1, cfg.max_outer_iters + 1):
        x, step = _inner_pgd(x, anchor, dual, res, instance, cfg, max(step, 1e-3))
        ga, go, _, _ = res.values(x)
        va, vo = _violation(ga), _violation(go)
        if trace:
            rows.append(TraceRow(k, va, vo, dual.rho_a, float(np.sum((x - anchor) ** 2))))
        score = max(va / cfg.delta_a, vo / cfg.delta_o)
        stalled = score >= 0.99 * prev_score
        prev_score = score
        if score < best[0]:
            best = (score, x, va, vo)
        Ha, Ho = slack_residuals(ga, go, dual)
        dual.nu_a = dual.nu_a + dual.rho_a * Ha
        dual.nu_o = dual.nu_o + dual.rho_o * Ho
        dual.iteration = k
        dual.rho_a = rho_a0 * cfg.zeta ** k
        dual.rho_o = rho_o0 * cfg.zeta ** k
        if va <= cfg.delta_a and vo <= cfg.delta_o:
            converged = True
            break
        if stalled and cfg.jitter > 0:
            # deep overlaps attract the iterate to the disc centre where every
            # gradient vanishes; kick those points once the duals can push them out
            x = _jitter_points(x, ga, go, res, instance, cfg, rng, depth=0.75)
        if max(dual.rho_a, dual.rho_o) > RHO_OVERFLOW:
            log.warning("penalty overflow after %d outer iterations", k)
            break

    if not converged:
        _, x, va, vo = best
        log.debug("ALM projection not converged: viol_a=%.3g viol_o=%.3g", va, vo)
    return ProjectionResult(Trajectory(x), dual, converged, va, vo, rows)


def write_trace_csv(rows: list[TraceRow], path) -> None:
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["k", "viol_a", "viol_o", "rho", "objective"])
        for r in rows:
            w.writerow([r.k, repr(r.viol_a), repr(r.viol_o), repr(r.rho), repr(r.objective)])
