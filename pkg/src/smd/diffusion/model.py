"""Fully-connected time-conditioned score network with hand-written backprop."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .schedule import NoiseSchedule

CHECKPOINT_FORMAT = "smd-score-model"
CHECKPOINT_VERSION = 1


def time_embedding(t, dim: int) -> np.ndarray:
    """Sinusoidal embedding of integer steps, shape (len(t), dim)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    ang = t[:, None] * freqs[None]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def silu(z):
    return z * _sigmoid(z)


def silu_grad(z):
    s = _sigmoid(z)
    return s * (1.0 + z * (1.0 - s))


@dataclass
class ScoreModel:
    """MLP mapping (flattened trajectory, time embedding) to a score estimate.

    The network predicts the noise ``eps``; the score is
    ``-eps_hat / sqrt(1 - abar_t)``. Trajectories enter normalised as
    ``(x - center) / scale``.
    """

    num_robots: int
    horizon: int
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    hidden: tuple[int, ...] = (256, 256, 256, 256)
    time_dim: int = 32
    center: float = 1.0
    scale: float = 1.0
    map_family: str = ""
    params: list = field(default_factory=list)  # [(W, b), ...]
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not self.params:
            self.init_params(self.seed)

    @property
    def dim(self) -> int:
        return self.num_robots * self.horizon * 2

    @property
    def layer_sizes(self) -> list[int]:
        return [self.dim + self.time_dim, *self.hidden, self.dim]

    def init_params(self, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        sizes = self.layer_sizes
        self.params = [
            (rng.standard_normal((m, n)) / np.sqrt(m), np.zeros(n))
            for m, n in zip(sizes[:-1], sizes[1:])
        ]

    def num_params(self) -> int:
        return sum(W.size + b.size for W, b in self.params)

    # -- network --------------------------------------------------------

    def forward(self, u: np.ndarray, t) -> tuple[np.ndarray, list]:
        """Noise prediction for normalised inputs ``u`` of shape (B, dim)."""
        t = np.broadcast_to(np.asarray(t), (u.shape[0],))
        h = np.concatenate([u, time_embedding(t, self.time_dim)], axis=1)
        cache = []
        last = len(self.params) - 1
        for k, (W, b) in enumerate(self.params):
            z = h @ W + b
            cache.append((h, z))
            h = z if k == last else silu(z)
        return h, cache

    def backward(self, dout: np.ndarray, cache: list) -> list:
        grads = [None] * len(self.params)
        last = len(self.params) - 1
        g = dout
        for k in range(last, -1, -1):
            h, z = cache[k]
            if k != last:
                g = g * silu_grad(z)
            W, _ = self.params[k]
            grads[k] = (h.T @ g, g.sum(axis=0))
            g = g @ W.T
        return grads

    def score(self, u: np.ndarray, t: int) -> np.ndarray:
        """Score of the normalised noised data at step ``t``; same shape as ``u``."""
        u = np.asarray(u, dtype=np.float64)
        eps, _ = self.forward(u.reshape(-1, self.dim), t)
        return (-eps / self.schedule.sigma(t)).reshape(u.shape)

    def normalize(self, x):
        return (np.asarray(x) - self.center) / self.scale

    def denormalize(self, u):
        return np.asarray(u) * self.scale + self.center

    # -- persistence ----------------------------------------------------

    def header(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "num_robots": self.num_robots,
            "horizon": self.horizon,
            "hidden": list(self.hidden),
            "time_dim": self.time_dim,
            "activation": "silu",
            "center": self.center,
            "scale": self.scale,
            "map_family": self.map_family,
            "schedule": self.schedule.to_dict(),
        }

    def save(self, path: str | Path) -> None:
        arrays = {}
        for k, (W, b) in enumerate(self.params):
            arrays[f"W{k}"] = W
            arrays[f"b{k}"] = b
        with open(path, "wb") as f:
            np.savez(f, header=np.array(json.dumps(self.header())), **arrays)

    @classmethod
    def load(cls, path: str | Path) -> ScoreModel:
        with np.load(path, allow_pickle=False) as z:
            hdr = json.loads(str(z["header"]))
            if hdr.get("format") != CHECKPOINT_FORMAT:
                raise ValueError(f"{path} is not a score-model checkpoint")
            if hdr["version"] > CHECKPOINT_VERSION:
                raise ValueError(f"checkpoint version {hdr['version']} is newer than supported")
            n_layers = len(hdr["hidden"]) + 1
            params = [(z[f"W{k}"].copy(), z[f"b{k}"].copy()) for k in range(n_layers)]
        return cls(
            num_robots=hdr["num_robots"], horizon=hdr["horizon"],
            schedule=NoiseSchedule(**hdr["schedule"]), hidden=tuple(hdr["hidden"]),
            time_dim=hdr["time_dim"], center=hdr["center"], scale=hdr["scale"],
            map_family=hdr.get("map_family", ""), params=params,
        )


@dataclass
class ZeroScore:
    """Stand-in score model that returns zero everywhere (ablations, tests)."""

    num_robots: int
    horizon: int
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    center: float = 1.0
    scale: float = 1.0

    def score(self, u, t):
        return np.zeros_like(np.asarray(u, dtype=np.float64))

    normalize = ScoreModel.normalize
    denormalize = ScoreModel.denormalize


class Adam:
    def __init__(self, params: list, lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        self.v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]

    def step(self, params: list, grads: list) -> None:
        """Update ``params`` in place."""
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k, (p_pair, g_pair) in enumerate(zip(params, grads)):
            for j in range(2):
                p, g = p_pair[j], g_pair[j]
                m = self.m[k][j]
                v = self.v[k][j]
                m *= self.b1
                m += (1 - self.b1) * g
                v *= self.b2
                v += (1 - self.b2) * g * g
                p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
