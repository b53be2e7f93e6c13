from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core import Trajectory
from .model import Adam, ScoreModel
from .schedule import NoiseSchedule

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 64
    epochs: int = 200
    seed: int = 0


def _stack(batch) -> np.ndarray:
    """World-unit trajectories as an (n, D) array."""
    if isinstance(batch, np.ndarray):
        arr = batch
    else:
        if len(batch) == 0:
            raise ValueError("empty batch")
        arr = np.stack([b.positions if isinstance(b, Trajectory) else np.asarray(b) for b in batch])
    if arr.size == 0:
        raise ValueError("empty batch")
    return arr.reshape(arr.shape[0], -1)


def score_matching_loss(model: ScoreModel, batch, schedule: NoiseSchedule,
                        rng: np.random.Generator, t=None, noise=None):
    """Weighted denoising score-matching loss and its gradient in the parameters.

    Per item: ``(1 - alpha_t) * mean_d (s_theta(x_t, t) - grad log q(x_t | x_0))^2``
    with ``t`` uniform on 1..T; the loss is the batch mean. ``t`` and ``noise``
    may be passed explicitly (finite-difference checks).
    """
    u0 = model.normalize(_stack(batch))
    B, D = u0.shape
    if t is None:
        t = rng.integers(1, schedule.num_steps + 1, size=B)
    t = np.broadcast_to(np.asarray(t), (B,))
    if noise is None:
        noise = rng.standard_normal((B, D))
    ab = schedule.alpha_bars[t][:, None]
    ut = np.sqrt(ab) * u0 + np.sqrt(1.0 - ab) * noise
    eps_hat, cache = model.forward(ut, t)
    # s - target = -(eps_hat - eps) / sigma_t
    w = (1.0 - schedule.alphas[t]) / (1.0 - schedule.alpha_bars[t])
    err = eps_hat - noise
    loss = float(np.mean(w * np.mean(err * err, axis=1)))
    dout = (2.0 / (B * D)) * w[:, None] * err
    return loss, model.backward(dout, cache)


def train(model: ScoreModel, dataset, config: TrainConfig | None = None,
          callback=None) -> tuple[ScoreModel, list[float]]:
    """Adam on the score-matching loss; returns the model and per-epoch mean loss."""
    cfg = config or TrainConfig()
    data = _stack(dataset)
    n = data.shape[0]
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.params, lr=cfg.lr)
    losses = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            loss, grads = score_matching_loss(model, data[idx], model.schedule, rng)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {s // cfg.batch_size}: {loss}; "
                    f"max |param| = {max(np.abs(W).max() for W, _ in model.params):.3g}")
            opt.step(model.params, grads)
            total += loss * len(idx)
        losses.append(total / n)
        if callback:
            callback(epoch, losses[-1])
        log.debug("epoch %d loss %.5f", epoch, losses[-1])
    return model, losses
