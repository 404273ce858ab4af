"""Expectation functionals of the maximum-gap state.

With X^x_u = max(x, S^mu_u) - B^mu_u the gap process restarted at level x,
the three functionals driving the free-boundary system are

* ``kernel_J`` :  J(t, x)              = E_x (X_{T-t})^2,
* ``kernel_K`` :  K(t, x, t+u, y, z)   = E_x [ H(t+u, X_u) ; y < X_u < z ],
* ``kernel_L`` :  L(t, x, t+u, y)      = E_x [ H(t+u, X_u) ; X_u > y ],

all evaluated by deterministic quadrature against the closed-form joint
law of (B^mu, S^mu).  ``sample_X`` draws X^x_u exactly (no time
discretization) and serves as the Monte Carlo oracle for the quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ToleranceError
from .problem import ProblemSpec
from .quadrature import MODE_J, MODE_K, MODE_L, xmax_expectation

__all__ = ["KernelQuery", "kernel_J", "kernel_K", "kernel_L", "sample_X"]

#: Paths per sampling block; each block draws from its own counter-based
#: stream keyed by (seed, block index), so any partition of blocks across
#: workers reproduces the same sample set.
SAMPLE_BLOCK = 1 << 16


def _check_lookahead(spec: ProblemSpec, t: float, u: float) -> None:
    if not 0.0 < u <= spec.T - t + 1e-12:
        raise ValueError(f"lookahead {u!r} outside (0, {spec.T - t!r}]")


def _checked(value_coarse: float, value_fine: float, tol: float | None) -> float:
    if tol is not None and abs(value_fine - value_coarse) > tol:
        raise ToleranceError(
            f"quadrature refinement moved the result by {abs(value_fine - value_coarse):.3e} > {tol:.3e}"
        )
    return value_fine


def kernel_J(spec: ProblemSpec, t: float, x: float, order: int = 32, tol: float | None = None) -> float:
    """Second moment J(t, x) = E_x (X_{T-t})^2 of the gap at the horizon.

    ``tol``, when given, re-evaluates with halved panels and raises
    ``ToleranceError`` if the value moves by more than ``tol``.
    """
    t = spec.check_time(t)
    if x < 0.0:
        raise ValueError(f"state must be nonnegative, got {x!r}")
    u = spec.T - t
    val = xmax_expectation(spec.mu, u, x, 0.0, np.inf, 0.0, MODE_J, order=order)
    if tol is None:
        return val
    fine = xmax_expectation(spec.mu, u, x, 0.0, np.inf, 0.0, MODE_J, order=order, refine=2)
    return _checked(val, fine, tol)


def kernel_K(
    spec: ProblemSpec,
    t: float,
    x: float,
    u: float,
    y: float,
    z: float,
    order: int = 32,
    refine: int = 1,
    tol: float | None = None,
) -> float:
    """Banded source expectation K(t, x, t+u, y, z) = E_x[H(t+u, X_u); y < X_u < z]."""
    t = spec.check_time(t)
    if x < 0.0:
        raise ValueError(f"state must be nonnegative, got {x!r}")
    _check_lookahead(spec, t, u)
    if not 0.0 <= y < z:
        raise ValueError(f"band must satisfy 0 <= y < z, got ({y!r}, {z!r})")
    tau_eval = max(spec.T - t - u, 0.0)
    mode = MODE_K if np.isfinite(z) else MODE_L
    val = xmax_expectation(spec.mu, u, x, y, z, tau_eval, mode, order=order, refine=refine)
    if tol is None:
        return val
    fine = xmax_expectation(
        spec.mu, u, x, y, z, tau_eval, mode, order=order, refine=2 * refine
    )
    return _checked(val, fine, tol)


def kernel_L(
    spec: ProblemSpec,
    t: float,
    x: float,
    u: float,
    y: float,
    order: int = 32,
    refine: int = 1,
    tol: float | None = None,
) -> float:
    """One-sided source expectation L(t, x, t+u, y) = E_x[H(t+u, X_u); X_u > y]."""
    if y < 0.0:
        raise ValueError(f"band floor must be nonnegative, got {y!r}")
    return kernel_K(spec, t, x, u, y, np.inf, order=order, refine=refine, tol=tol)


@dataclass(frozen=True)
class KernelQuery:
    """One kernel evaluation point: state x at time t, looking ahead u.

    ``band = (y, z)`` selects K (finite z) or L (z = +inf); ``band = None``
    selects J, in which case ``u`` must equal the full remaining time T - t.
    """

    spec: ProblemSpec
    t: float
    x: float
    u: float
    band: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        self.spec.check_time(self.t)
        if self.x < 0.0:
            raise ValueError(f"state must be nonnegative, got {self.x!r}")
        if not 0.0 <= self.u <= self.spec.T - self.t + 1e-12:
            raise ValueError(f"lookahead {self.u!r} outside [0, {self.spec.T - self.t!r}]")
        if self.band is not None:
            y, z = self.band
            if not 0.0 <= y < z:
                raise ValueError(f"band must satisfy 0 <= y < z, got {self.band!r}")

    def evaluate(self, order: int = 32, tol: float | None = None) -> float:
        """Dispatch to kernel_J / kernel_K / kernel_L as the band dictates."""
        if self.band is None:
            return kernel_J(self.spec, self.t, self.x, order=order, tol=tol)
        y, z = self.band
        if np.isfinite(z):
            return kernel_K(self.spec, self.t, self.x, self.u, y, z, order=order, tol=tol)
        return kernel_L(self.spec, self.t, self.x, self.u, y, order=order, tol=tol)


def philox_stream(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for one sampling block.

    The 128-bit Philox key packs the user seed in the low word and the
    block index in the high word; the resulting streams are mutually
    independent and assignment of blocks to workers cannot change them.
    """
    key = (int(seed) & ((1 << 64) - 1)) | (int(block) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_X(spec: ProblemSpec, x: float, u: float, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` exact samples of X^x_u = max(x, S^mu_u) - B^mu_u.

    Sampling is exact in law (no path discretization): B_u is Gaussian and,
    given B_u = b, the running maximum has the reflection-kernel cdf
    1 - exp(-2 s (s - b) / u) on s >= max(0, b), inverted in closed form.
    Deterministic per seed; block-partitioned so any worker split of the
    blocks yields the identical sample set.
    """
    if u <= 0.0:
        raise ValueError(f"duration must be positive, got {u!r}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count!r}")
    if x < 0.0:
        raise ValueError(f"state must be nonnegative, got {x!r}")
    out = np.empty(count, dtype=float)
    for block, lo in enumerate(range(0, count, SAMPLE_BLOCK)):
        n = min(SAMPLE_BLOCK, count - lo)
        rng = philox_stream(seed, block)
        z_norm = rng.standard_normal(n)
        unif = rng.random(n)
        b = spec.mu * u + np.sqrt(u) * z_norm
        s = 0.5 * (b + np.sqrt(b * b - 2.0 * u * np.log1p(-unif)))
        out[lo : lo + n] = np.maximum(x, s) - b
    return out
