"""Zero-level curves of the source function H.

For each time t the state axis splits into the region where H(t, .) < 0
(continuation is locally favorable) and, once it exists, the window
[gamma1(t), gamma2(t)] where H >= 0.  For drift mu <= 0 the window is
one-sided (gamma2 = +inf); for mu > 0 it is born at a strictly positive
time u_star and gamma2(T) = 1/(2 mu).

The curves bound the optimal stopping band from outside and seed the
root brackets of the boundary solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BracketingError
from .gain import h_raw
from .problem import ProblemSpec

__all__ = ["GammaCurves", "gamma_curves", "gamma1_level", "gamma2_level"]

_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)
_ROOT_HTOL = 1e-10
_USTAR_TTOL = 1e-6


def _golden_max(f, lo: float, hi: float, xtol: float = 1e-7) -> tuple[float, float]:
    """Bounded golden-section maximizer of a unimodal scalar function."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


def _bisect_root(f, lo: float, hi: float) -> float:
    """Bisection on a bracketing interval, run to |f| <= 1e-10."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketingError(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= _ROOT_HTOL or hi - lo <= 1e-14 * max(1.0, abs(mid)):
            return mid
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _upper_cap(spec: ProblemSpec) -> float:
    if spec.mu > 0.0:
        return 2.0 * max(1.0 / spec.mu, 4.0 * np.sqrt(spec.T))
    return 2.0 * 4.0 * np.sqrt(spec.T)


def _levels_at(spec: ProblemSpec, t: float) -> tuple[float, float]:
    """Both zero levels of H(t, .), as (gamma1, gamma2); NaN when absent."""
    mu, T = spec.mu, spec.T
    tau = T - t
    if tau == 0.0:
        return 0.0, (0.5 / mu if mu > 0.0 else np.inf)

    def h(x):
        return float(h_raw(mu, tau, x))

    if mu <= 0.0:
        # H rises from H(t,0) < 0 to +inf: single crossing, no upper level.
        hi = _upper_cap(spec)
        while h(hi) <= 0.0:
            hi *= 2.0
        return _bisect_root(h, 0.0, hi), np.inf

    x_hi = _upper_cap(spec)
    x_mid, h_max = _golden_max(h, 0.0, x_hi)
    if h_max < 0.0:
        return np.nan, np.nan
    return _bisect_root(h, 0.0, x_mid), _bisect_root(h, x_mid, x_hi)


def gamma1_level(spec: ProblemSpec, t: float) -> float:
    """Lower zero of H(t, .); NaN while the nonnegative window does not exist."""
    return _levels_at(spec, spec.check_time(t))[0]


def gamma2_level(spec: ProblemSpec, t: float) -> float:
    """Upper zero of H(t, .); +inf for mu <= 0, NaN before the window exists."""
    return _levels_at(spec, spec.check_time(t))[1]


@dataclass(frozen=True)
class GammaCurves:
    """Zero-level curves of H tabulated on a time grid.

    ``gamma1``/``gamma2`` hold NaN at grid times before ``u_star``;
    ``gamma2`` is +inf throughout for mu <= 0.  ``w_star`` is the time at
    which gamma1 switches from increasing to decreasing (mu <= 0 only).
    """

    spec: ProblemSpec
    grid: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    u_star: float
    w_star: float | None = field(default=None)


def gamma_curves(spec: ProblemSpec, grid) -> GammaCurves:
    """Tabulate the zero-level curves of H on a strictly increasing grid.

    Parameters
    ----------
    spec : ProblemSpec
        Problem instance.
    grid : array-like
        Strictly increasing partition of [0, T] (endpoints included).

    Returns
    -------
    GammaCurves
        Levels per grid time, the window birth time ``u_star`` (located to
        1e-6 by bisection in t between neighbouring grid times), and the
        monotonicity switch ``w_star`` of gamma1 for mu <= 0.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be strictly increasing with at least 2 points")
    if abs(grid[0]) > 1e-12 or abs(grid[-1] - spec.T) > 1e-12:
        raise ValueError("grid must run from 0 to the horizon")

    pairs = [_levels_at(spec, t) for t in grid]
    g1 = np.array([p[0] for p in pairs])
    g2 = np.array([p[1] for p in pairs])

    exists = ~np.isnan(g1)
    first = int(np.argmax(exists))
    if spec.mu <= 0.0 or exists[0]:
        u_star = float(grid[0])
    else:
        # Window is born between two grid times; H is nondecreasing in t
        # here, so the existence predicate is monotone and bisection applies.
        lo, hi = float(grid[first - 1]), float(grid[first])

        def window_exists(t: float) -> bool:
            return _levels_at(spec, t)[0] == _levels_at(spec, t)[0]  # not NaN

        while hi - lo > _USTAR_TTOL:
            mid = 0.5 * (lo + hi)
            if window_exists(mid):
                hi = mid
            else:
                lo = mid
        u_star = 0.5 * (lo + hi)

    w_star = None
    if spec.mu <= 0.0:
        w_star, _ = _golden_max(lambda t: _levels_at(spec, t)[0], 0.0, spec.T, xtol=1e-6)
        if w_star < 1e-5:
            w_star = 0.0
    return GammaCurves(spec, grid, g1, g2, u_star, w_star)
