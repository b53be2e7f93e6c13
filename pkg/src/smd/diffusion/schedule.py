from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Variance-preserving schedule with linear betas.

    Arrays are indexed by diffusion step, index 0 being the clean-data
    convention ``alpha_bar[0] = 1``; valid noising steps are ``1..num_steps``.
    """

    num_steps: int = 25
    beta_min: float = 1e-4
    beta_max: float = 0.25

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")
        if not 0 < self.beta_min <= self.beta_max < 1:
            raise ValueError("need 0 < beta_min <= beta_max < 1")

    @property
    def betas(self) -> np.ndarray:
        return np.concatenate([[0.0], np.linspace(self.beta_min, self.beta_max, self.num_steps)])

    @property
    def alphas(self) -> np.ndarray:
        return 1.0 - self.betas

    @property
    def alpha_bars(self) -> np.ndarray:
        return np.cumprod(self.alphas)

    def sigma(self, t) -> np.ndarray:
        """Marginal noise std sqrt(1 - alpha_bar_t)."""
        return np.sqrt(1.0 - self.alpha_bars[t])

    def to_dict(self) -> dict:
        return {"num_steps": self.num_steps, "beta_min": self.beta_min, "beta_max": self.beta_max}


def forward_sample(x0, t: int, noise, schedule: NoiseSchedule) -> np.ndarray:
    """x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps. ``t = 0`` returns x_0."""
    if not 0 <= t <= schedule.num_steps:
        raise ValueError(f"t={t} outside [0, {schedule.num_steps}]")
    ab = schedule.alpha_bars[t]
    return np.sqrt(ab) * np.asarray(x0) + np.sqrt(1.0 - ab) * np.asarray(noise)
