"""Problem definition: drift and horizon of the prediction problem.

The object of study is a Brownian motion with drift, B_t + mu*t, observed on
[0, T], together with its running maximum S.  A problem instance is fully
described by the pair (mu, T).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class ProblemSpec:
    """Drift ``mu`` (any sign) and horizon ``T`` (> 0) of one problem instance."""

    mu: float
    T: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu):
            raise ConfigError(f"drift must be finite, got {self.mu!r}")
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise ConfigError(f"horizon must be positive and finite, got {self.T!r}")

    def check_time(self, t: float) -> float:
        """Validate ``t`` lies in [0, T] and return it as a float."""
        t = float(t)
        if not 0.0 <= t <= self.T:
            raise ConfigError(f"time {t!r} outside [0, {self.T}]")
        return t
