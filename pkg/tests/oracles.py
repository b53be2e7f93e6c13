"""Brute-force grid oracles for tiny projection problems.

They share no code with the solver: candidates are grid points that satisfy
every constraint exactly (true radii, no margin), and the best combination is
found by exhaustive search, so the returned objective is an upper bound on the
true optimum that tightens with the resolution.
"""

import numpy as np


def _grid(lo, hi, step):
    xs = np.arange(lo[0], hi[0] + step / 2, step)
    ys = np.arange(lo[1], hi[1] + step / 2, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def _point_ok(pts, inst, robot):
    r = inst.robots[robot].radius
    ok = np.all((pts >= 0) & (pts <= inst.workspace_side), axis=1)
    for ob in inst.obstacles:
        ok &= np.sum((pts - ob.center) ** 2, axis=1) >= (r + ob.radius) ** 2
    return ok


def _candidates(inst, robot, h, step, window=None):
    """Grid points for waypoint h that respect box, obstacles and reachability."""
    rb = inst.robots[robot]
    lim = rb.v_max * inst.dt
    H = inst.horizon
    reach_s, reach_g = h * lim, (H - 1 - h) * lim
    if window is None:
        lo = np.maximum(rb.start - reach_s, 0.0)
        hi = np.minimum(rb.start + reach_s, inst.workspace_side)
        lo = np.floor(lo / step) * step
    else:
        lo, hi = window
    pts = _grid(lo, hi, step)
    ok = _point_ok(pts, inst, robot)
    ok &= np.linalg.norm(pts - rb.start, axis=1) <= reach_s
    ok &= np.linalg.norm(pts - rb.goal, axis=1) <= reach_g
    return pts[ok]


def _chain_dp(cands, anchor, start, goal, lim):
    """Exact minimum of sum |p_h - a_h|^2 over candidate sets with |p_h - p_{h-1}| <= lim."""
    cost = np.zeros(1)
    prev = start[None]
    back = []
    for h, C in enumerate(cands, start=1):
        best = np.full(len(C), np.inf)
        arg = np.zeros(len(C), dtype=int)
        for s in range(0, len(C), 2048):
            blk = C[s:s + 2048]
            d = np.linalg.norm(blk[:, None] - prev[None], axis=-1)
            tot = np.where(d <= lim, cost[None], np.inf)
            arg[s:s + 2048] = np.argmin(tot, axis=1)
            best[s:s + 2048] = tot[np.arange(len(blk)), arg[s:s + 2048]]
        cost = best + np.sum((C - anchor[h]) ** 2, axis=1)
        back.append(arg)
        prev = C
    cost = np.where(np.linalg.norm(prev - goal, axis=1) <= lim, cost, np.inf)
    k = int(np.argmin(cost))
    if not np.isfinite(cost[k]):
        return np.inf, None
    best_cost = float(cost[k])
    path = [prev[k]]
    for h in range(len(cands) - 1, 0, -1):
        k = back[h][k]
        path.append(cands[h - 1][k])
    return best_cost, np.array(path[::-1])


def single_robot_oracle(inst, anchor, step=1e-2, refine=1e-3, radius=0.02):
    """Nearest feasible trajectory of a one-robot instance (free waypoints 1..H-2)."""
    rb = inst.robots[0]
    lim = rb.v_max * inst.dt
    a = np.asarray(anchor)[0]
    fixed = np.sum((a[0] - rb.start) ** 2) + np.sum((a[-1] - rb.goal) ** 2)
    H = inst.horizon
    cands = [_candidates(inst, 0, h, step) for h in range(1, H - 1)]
    val, path = _chain_dp(cands, a, rb.start, rb.goal, lim)
    if path is None:
        return np.inf, None
    if refine:
        cands = [_candidates(inst, 0, h, refine, (p - radius, p + radius)) for h, p in
                 zip(range(1, H - 1), path)]
        v2, p2 = _chain_dp(cands, a, rb.start, rb.goal, lim)
        if v2 < val:
            val, path = v2, p2
    full = np.vstack([rb.start, path, rb.goal])[None]
    return val + fixed, full


def two_robot_midpoint_oracle(inst, anchor, step=1e-2, refine=1e-3, radius=0.02):
    """Two robots with H = 3: joint search over both midpoints."""
    a = np.asarray(anchor)
    R = inst.robots[0].radius + inst.robots[1].radius

    def solve(P, Q):
        best, arg = np.inf, None
        cq = np.sum((Q - a[1, 1]) ** 2, axis=1)
        for s in range(0, len(P), 1024):
            blk = P[s:s + 1024]
            sep = np.sum((blk[:, None] - Q[None]) ** 2, axis=-1) >= R * R
            tot = np.where(sep, np.sum((blk - a[0, 1]) ** 2, axis=1)[:, None] + cq[None], np.inf)
            k = np.unravel_index(np.argmin(tot), tot.shape)
            if tot[k] < best:
                best, arg = tot[k], (blk[k[0]], Q[k[1]])
        return best, arg

    P = _candidates(inst, 0, 1, step)
    Q = _candidates(inst, 1, 1, step)
    val, arg = solve(P, Q)
    if arg is None:
        return np.inf, None
    if refine:
        v2, a2 = solve(_candidates(inst, 0, 1, refine, (arg[0] - radius, arg[0] + radius)),
                       _candidates(inst, 1, 1, refine, (arg[1] - radius, arg[1] + radius)))
        if v2 < val:
            val, arg = v2, a2
    fixed = sum(np.sum((a[i, 0] - inst.robots[i].start) ** 2) + np.sum((a[i, -1] - inst.robots[i].goal) ** 2)
                for i in range(2))
    full = np.array([[inst.robots[i].start, arg[i], inst.robots[i].goal] for i in range(2)])
    return float(val + fixed), full
