"""Noise schedules and source smoothing.

Two convolution kinds, matching how each level is applied:

    gaussian_conv         x~ = x + level * z       (level is a std-dev)
    variance_preserving   x~ = sqrt(1-level) * x + sqrt(level) * z
                                                   (level is a variance in [0,1))

plus a ``constant`` kind that behaves like gaussian_conv pinned at
sigma_min for every step (level 0 turns smoothing off entirely, which is
the plain max-min baseline).

Levels are piecewise constant on blocks of ``period`` steps and decrease
stepwise from sigma_max to sigma_min over ``total`` steps:

    gaussian_conv         level(k) = (1-t)*sigma_max + t*sigma_min
                          with t = (period*floor(k/period) + 1) / total
    variance_preserving   level(k) = 1 - exp(-(sigma_max-sigma_min)/2 * t^2
                                             - sigma_min * t)
                          with t = 1 - (period*floor(k/period) + 1) / total
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError

KINDS = ("gaussian_conv", "variance_preserving", "constant")


@dataclass(frozen=True)
class NoiseSchedule:
    kind: str
    sigma_max: float
    sigma_min: float
    period: int
    total: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.period < 1:
            raise ConfigError(f"schedule period must be >= 1, got {self.period}")
        if self.total < 0:
            raise ConfigError(f"schedule total must be >= 0, got {self.total}")
        if self.sigma_min < 0 or self.sigma_max < self.sigma_min:
            raise ConfigError(
                f"need sigma_max >= sigma_min >= 0, got ({self.sigma_max}, {self.sigma_min})"
            )

    def convolution_kind(self):
        """Which perturbation rule applies at evaluation time."""
        return "variance_preserving" if self.kind == "variance_preserving" else "gaussian_conv"


def constant_schedule(level, total=1):
    return NoiseSchedule(kind="constant", sigma_max=level, sigma_min=level,
                         period=1, total=total)


def level_at(sched, k):
    """Noise level at step k (0 <= k < total)."""
    if not 0 <= k < sched.total:
        raise ContractError(f"step {k} outside schedule range [0, {sched.total})")
    if sched.kind == "constant":
        return sched.sigma_min
    t = (sched.period * (k // sched.period) + 1) / sched.total
    if sched.kind == "gaussian_conv":
        return (1.0 - t) * sched.sigma_max + t * sched.sigma_min
    t = 1.0 - t
    return 1.0 - np.exp(-(sched.sigma_max - sched.sigma_min) / 2.0 * t * t
                        - sched.sigma_min * t)


def perturb(x, sched, k, rng):
    """Smooth a [batch, d] sample batch at the schedule's level for step k."""
    return perturb_level(x, sched.convolution_kind(), level_at(sched, k), rng)


def perturb_level(x, kind, level, rng):
    """Apply one convolution at an explicit level; level 0 is the identity."""
    x = np.asarray(x, dtype=np.float64)
    if level == 0.0:
        return x.copy()
    if kind == "gaussian_conv":
        return x + level * rng.standard_normal(x.shape)
    if kind == "variance_preserving":
        if not 0.0 <= level < 1.0:
            raise ConfigError(
                f"variance-preserving level must lie in [0, 1), got {level}"
            )
        z = rng.standard_normal(x.shape)
        return np.sqrt(1.0 - level) * x + np.sqrt(level) * z
    raise ConfigError(f"unknown convolution kind {kind!r}")
