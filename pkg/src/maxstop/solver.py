"""Backward recursion for the optimal stopping band of the gap process.

The optimal rule stops the first time the gap X_t = S^mu_t - B^mu_t enters
a band [b1(t), b2(t)] (one-sided, b2 = +inf, for mu <= 0).  On a uniform
grid t_k = k h the boundary values solve, step by step backward in time,
the scalar equation in xi = b_i(t_k)

    I(t_k, xi) = Q_k(xi),

where I(t, x) = J(t, x) - G(t, x) and Q_k approximates the time integral
of the banded source expectation u -> K(t_k, xi, t_k + u, b1, b2) over
(0, T - t_k] along the already-solved future boundary values.

Discretization of Q_k.  The integrand behaves like sqrt(u) for small u and
like sqrt(T - t) near the horizon, and the unknown xi is itself the band
edge at the left endpoint, so a plain right-endpoint rectangle sum sees no
sign change in xi at all.  Q_k therefore uses three zones:

* first ``M_SHIELD`` grid panels: Gauss-Legendre in the variable
  v = sqrt(u), with the band interpolated linearly in sqrt(T - t) between
  the panel's knot values and, on the first panel, pinned to the unknown
  xi itself at u = 0 (this makes xi a genuine band edge of the scheme and
  restores a transversal sign change of the residual);
* middle grid knots: composite trapezoid, each knot with its own solved
  band values;
* last ``M_SHIELD`` panels: Gauss-Legendre in v = sqrt(T - t), absorbing
  the square-root shrinkage of the band at the horizon.

When the remaining window is short the two end zones meet and the middle
zone is empty; the first backward step is a single end panel whose band
interpolates from xi straight to the terminal seeds.

Merge detection follows the midpoint rule: the first backward step with no
root in the bracket (after a refined-quadrature retry) or with
b2 - b1 < merge_gap sets t_star between the last solvable and first
unsolvable grid times, and all earlier times carry no-band markers.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .curves import _levels_at
from .errors import ConfigError, ToleranceError
from .gain import gain_raw, gl_nodes
from .kernels import kernel_J
from .problem import ProblemSpec
from .quadrature import MODE_K, MODE_L, xmax_expectation

__all__ = [
    "SolverConfig",
    "BoundaryTable",
    "residual_I",
    "solve_boundaries",
    "solve_defects",
    "refine_convergence",
    "ConvergenceReport",
]

#: sqrt-substituted Gauss-Legendre panels at each end of the time window.
M_SHIELD = 8
#: Gauss-Legendre order on the two boundary-critical panels (first, last).
_ORDER_EDGE = 8
#: Gauss-Legendre order on the remaining shield panels.
_ORDER_BODY = 4


@dataclass(frozen=True)
class SolverConfig:
    """Grid size, quadrature order, and tolerance policy of the recursion."""

    n_steps: int = 200
    quad_order: int = 32
    root_tol: float = 1e-8
    level_tol: float = 1e-7
    merge_gap: float = 1e-5

    def __post_init__(self) -> None:
        if int(self.n_steps) != self.n_steps or self.n_steps < 16:
            raise ConfigError(f"n_steps must be an integer >= 16, got {self.n_steps!r}")
        if not 2 <= self.quad_order <= 64:
            raise ConfigError(f"quad_order must be in [2, 64], got {self.quad_order!r}")
        for name in ("root_tol", "level_tol", "merge_gap"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ConfigError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True, eq=False)
class BoundaryTable:
    """Solved stopping-band edges on a uniform time grid.

    ``b1``/``b2`` are NaN before ``t_star`` (no band yet); ``b2`` is +inf
    throughout for mu <= 0.  ``z_star`` locates the hump peak of b1 for
    mu < 0 (0 for mu = 0, None for mu > 0).
    """

    spec: ProblemSpec
    grid: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    t_star: float
    z_star: float | None = field(default=None)

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def band_at(self, t: float) -> tuple[float, float]:
        """Band edges at time t, linearly interpolated between grid times."""
        t = self.spec.check_time(t)
        idx = int(np.searchsorted(self.grid, t, side="right")) - 1
        if idx >= len(self.grid) - 1:
            return float(self.b1[-1]), float(self.b2[-1])
        frac = (t - self.grid[idx]) / (self.grid[idx + 1] - self.grid[idx])
        lo = _lerp(self.b1[idx], self.b1[idx + 1], frac)
        hi = _lerp(self.b2[idx], self.b2[idx + 1], frac)
        return lo, hi


def _lerp(a: float, b: float, frac: float) -> float:
    if frac == 0.0:
        return float(a)
    if np.isinf(a) and np.isinf(b):
        return float(a)
    return float(a + (b - a) * frac)


def residual_I(spec: ProblemSpec, t: float, x: float, order: int = 32) -> float:
    """I(t, x) = J(t, x) - G(t, x): excess of the horizon second moment
    over the immediate gain.  Zero at t = T for every x."""
    return kernel_J(spec, t, x, order=order) - gain_raw(spec.mu, spec.T, spec.check_time(t), float(x))


# ------------------------------------------------------- discretized system


def _interp_sqrt(T: float, t: float, ta: float, va: float, tb: float, vb: float) -> float:
    """Interpolate a band edge linearly in sqrt(T - t) between two knots.

    Exact for edges of the form c * sqrt(T - t), the local shape of every
    boundary near the horizon; +inf endpoints propagate to +inf.
    """
    if not (np.isfinite(va) and np.isfinite(vb)):
        return np.inf
    ra, rb, r = np.sqrt(T - ta), np.sqrt(T - tb), np.sqrt(T - t)
    if rb == ra:
        return vb
    return va + (vb - va) * (ra - r) / (ra - rb)


def _panel_low(spec, tk, xi, u0, u1, ta, ya, za, tb, yb, zb, mode, order, refine, edge):
    """Integral of u -> K(t_k, xi, t_k+u, band(t_k+u)) over [u0, u1], v = sqrt(u)."""
    vg, wg = gl_nodes(_ORDER_EDGE if edge else _ORDER_BODY)
    a, b = np.sqrt(u0), np.sqrt(u1)
    nodes = 0.5 * (b - a) * (vg + 1.0) + a
    weights = 0.5 * (b - a) * wg
    T = spec.T
    total = 0.0
    for vi, wi in zip(nodes, weights):
        u = vi * vi
        y = _interp_sqrt(T, tk + u, ta, ya, tb, yb)
        z = _interp_sqrt(T, tk + u, ta, za, tb, zb)
        total += wi * 2.0 * vi * xmax_expectation(
            spec.mu, u, xi, y, z, T - tk - u, mode, order=order, refine=refine
        )
    return total


def _panel_high(spec, tk, xi, u0, u1, ta, ya, za, tb, yb, zb, mode, order, refine, edge):
    """Same per-panel integral in the terminal variable v = sqrt(T - t)."""
    vg, wg = gl_nodes(_ORDER_EDGE if edge else _ORDER_BODY)
    T = spec.T
    a, b = np.sqrt(T - tk - u1), np.sqrt(T - tk - u0)
    nodes = 0.5 * (b - a) * (vg + 1.0) + a
    weights = 0.5 * (b - a) * wg
    total = 0.0
    for vi, wi in zip(nodes, weights):
        u = T - tk - vi * vi
        y = _interp_sqrt(T, tk + u, ta, ya, tb, yb)
        z = _interp_sqrt(T, tk + u, ta, za, tb, zb)
        total += wi * 2.0 * vi * xmax_expectation(
            spec.mu, u, xi, y, z, T - tk - u, mode, order=order, refine=refine
        )
    return total


def _rhs_sum(spec, grid, b1, b2, k, xi, mode, solving, fixed_edge, order, refine):
    """The discretized time integral Q_k(xi) described in the module docstring.

    ``solving`` selects which band edge at t_k the unknown xi plays
    (1: lower, 2: upper); ``fixed_edge`` supplies the other edge (the
    frozen previous-step value for the lower solve, the already-solved
    b1(t_k) for the upper solve).
    """
    n = len(grid) - 1
    h = grid[1] - grid[0]
    tk = grid[k]
    n_panels = n - k
    m_lo = min(M_SHIELD, n_panels)
    m_hi = min(M_SHIELD, n_panels - m_lo)

    q = 0.0
    for j in range(k, k + m_lo):
        if j == k:
            ya, za = (xi, fixed_edge) if solving == 1 else (fixed_edge, xi)
        else:
            ya, za = b1[j], b2[j]
        q += _panel_low(
            spec, tk, xi, grid[j] - tk, grid[j + 1] - tk,
            grid[j], ya, za, grid[j + 1], b1[j + 1], b2[j + 1],
            mode, order, refine, edge=(j == k),
        )
    for j in range(n - m_hi, n):
        q += _panel_high(
            spec, tk, xi, grid[j] - tk, grid[j + 1] - tk,
            grid[j], b1[j], b2[j], grid[j + 1], b1[j + 1], b2[j + 1],
            mode, order, refine, edge=(j == n - 1),
        )
    j_lo, j_hi = k + m_lo, n - m_hi
    if j_lo < j_hi:
        for j in range(j_lo, j_hi + 1):
            wj = h if j_lo < j < j_hi else 0.5 * h
            q += wj * xmax_expectation(
                spec.mu, grid[j] - tk, xi, b1[j], b2[j], spec.T - grid[j],
                mode, order=order, refine=refine,
            )
    return q


def _make_residual(spec, grid, b1, b2, k, mode, solving, fixed_edge, order, refine=1):
    """Scalar residual xi -> I(t_k, xi) - Q_k(xi) for the step-k root solve."""
    tk = grid[k]
    tau = spec.T - tk

    def psi(xi: float) -> float:
        ival = xmax_expectation(spec.mu, tau, xi, 0.0, np.inf, 0.0, 0, order=order) \
            - gain_raw(spec.mu, spec.T, tk, xi)
        return ival - _rhs_sum(spec, grid, b1, b2, k, xi, mode, solving, fixed_edge, order, refine)

    return psi


# ------------------------------------------------------------- root finding


def _first_crossing(psi, lo: float, hi: float, n_probe: int, downward: bool = False):
    """March the bracket for the first - -> + sign change of psi and refine it.

    The residual is negative on the continuation side and positive inside
    the band, so the lower edge is found marching upward and the upper edge
    marching downward.
    """
    xs = np.linspace(hi, lo, n_probe + 1) if downward else np.linspace(lo, hi, n_probe + 1)
    f_prev = psi(xs[0])
    for x_prev, x in zip(xs[:-1], xs[1:]):
        f = psi(x)
        if f_prev < 0.0 < f:
            return brentq(psi, min(x_prev, x), max(x_prev, x), xtol=1e-10)
        f_prev = f
    return None


def _bracketed_root(psi, lo: float, hi: float):
    """brentq on [lo, hi] if psi changes sign - -> + there, else None."""
    if not lo < hi:
        return None
    flo, fhi = psi(lo), psi(hi)
    if flo < 0.0 < fhi:
        return brentq(psi, lo, hi, xtol=1e-10)
    return None


# ------------------------------------------------------------------- solver


def solve_boundaries(spec: ProblemSpec, config: SolverConfig) -> BoundaryTable:
    """Solve the discretized boundary system backward from the horizon.

    Terminal seeds are analytic: b1(T) = 0 and, for mu > 0,
    b2(T) = 1/(2 mu).  Each backward step solves the lower edge first
    (upper edge frozen at its previous-step value, an O(h) effect), then
    the upper edge with the fresh lower edge fixed.  Root brackets are
    seeded from the previous step and capped by the zero-level curves of
    H, which sandwich the band; a full-bracket march and a
    quadrupled-quadrature retry run before a merge is declared.
    """
    n = int(config.n_steps)
    grid = np.linspace(0.0, spec.T, n + 1)
    h = spec.T / n
    mu = spec.mu
    one_sided = mu <= 0.0
    mode = MODE_L if one_sided else MODE_K
    order = config.quad_order

    b1 = np.full(n + 1, np.nan)
    b2 = np.full(n + 1, np.inf if one_sided else np.nan)
    b1[n] = 0.0
    if not one_sided:
        b2[n] = 0.5 / mu

    t_star = 0.0
    sqrt_h = np.sqrt(h)
    for k in range(n - 1, -1, -1):
        tk = grid[k]
        g1, g2 = _levels_at(spec, tk)
        if np.isnan(g1):
            t_star = 0.5 * (grid[k] + grid[k + 1])
            break

        prev1, prev2 = b1[k + 1], b2[k + 1]
        step_cap = 2.0 * (np.sqrt(spec.T - tk) - np.sqrt(spec.T - grid[k + 1])) + 0.05 * sqrt_h
        hi_cap = g2 if np.isfinite(g2) else prev1 + 3.5 * sqrt_h

        psi1 = _make_residual(spec, grid, b1, b2, k, mode, 1, prev2, order)
        lo_wide = max(1e-10, 0.8 * g1 if g1 > 0.0 else 0.05 * hi_cap)
        hi_wide = min(hi_cap, prev1 + 3.5 * sqrt_h)
        r1 = _bracketed_root(
            psi1, max(lo_wide, prev1 - 0.5 * step_cap), min(hi_wide, prev1 + step_cap)
        )
        if r1 is None:
            r1 = _first_crossing(psi1, lo_wide, hi_wide, 16)
        if r1 is None:
            r1 = _first_crossing(psi1, lo_wide, min(hi_cap, hi_wide * 2.5), 24)
        if r1 is None:
            psi1_fine = _make_residual(spec, grid, b1, b2, k, mode, 1, prev2, order, refine=4)
            r1 = _first_crossing(psi1_fine, lo_wide, hi_cap, 24)

        r2 = np.inf
        if not one_sided:
            lower = r1 if r1 is not None else prev1
            psi2 = _make_residual(spec, grid, b1, b2, k, mode, 2, lower, order)
            lo2 = max(lower + 1e-9, prev2 - 3.5 * sqrt_h)
            hi2 = min(g2, prev2 + 0.5 * sqrt_h)
            r2 = _bracketed_root(psi2, max(lo2, prev2 - step_cap), min(hi2, prev2 + 0.5 * step_cap))
            if r2 is None:
                r2 = _first_crossing(psi2, lo2, hi2, 16, downward=True)
            if r2 is None:
                r2 = _first_crossing(psi2, lo2, g2, 24, downward=True)
            if r2 is None:
                psi2_fine = _make_residual(spec, grid, b1, b2, k, mode, 2, lower, order, refine=4)
                r2 = _first_crossing(psi2_fine, lo2, g2, 24, downward=True)

        merged = r1 is None or (not one_sided and (r2 is None or r2 - r1 < config.merge_gap))
        if merged:
            t_star = 0.5 * (grid[k] + grid[k + 1])
            break
        b1[k] = r1
        if not one_sided:
            b2[k] = r2

    _warn_monotonicity(spec, grid, b1, b2, t_star, config.level_tol)
    z_star = _hump_time(spec, grid, b1) if one_sided else None
    return BoundaryTable(spec, grid, b1, b2, t_star, z_star)


def _warn_monotonicity(spec, grid, b1, b2, t_star, level_tol) -> None:
    """Report (non-fatally) monotonicity violations beyond tolerance (mu > 0)."""
    if spec.mu <= 0.0:
        return
    active = np.isfinite(b1)
    if active.sum() < 2:
        return
    d1 = np.diff(b1[active])
    d2 = np.diff(b2[active])
    if np.any(d1 > level_tol * 10) or np.any(d2 < -level_tol * 10):
        warnings.warn(
            f"solved boundaries violate monotonicity beyond tolerance "
            f"(max b1 rise {d1.max():.2e}, max b2 drop {-d2.min():.2e})",
            RuntimeWarning,
            stacklevel=3,
        )


def _hump_time(spec, grid, b1) -> float | None:
    """Peak time of the lower boundary for mu <= 0 (parabolic vertex refine)."""
    active = np.where(np.isfinite(b1[:-1]))[0]
    if len(active) == 0:
        return None
    values = b1[active]
    j = int(np.argmax(values))
    if j == 0 or j == len(values) - 1:
        return float(grid[active[j]])
    y0, y1, y2 = values[j - 1], values[j], values[j + 1]
    denom = y0 - 2.0 * y1 + y2
    offset = 0.0 if denom == 0.0 else 0.5 * (y0 - y2) / denom
    offset = min(max(offset, -1.0), 1.0)
    return float(grid[active[j]] + offset * (grid[1] - grid[0]))


def solve_defects(spec: ProblemSpec, table: BoundaryTable, config: SolverConfig):
    """Residual defect |I - Q| of the discretized system at the solved edges.

    Returns arrays (d1, d2) aligned with the grid (NaN off the band); the
    solver's own equations are satisfied when every entry is at most
    10 * root_tol.
    """
    grid, b1, b2 = table.grid, table.b1, table.b2
    n = len(grid) - 1
    one_sided = spec.mu <= 0.0
    mode = MODE_L if one_sided else MODE_K
    d1 = np.full(n + 1, np.nan)
    d2 = np.full(n + 1, np.nan)
    for k in range(n):
        if not np.isfinite(b1[k]):
            continue
        psi1 = _make_residual(spec, grid, b1, b2, k, mode, 1, b2[k + 1], config.quad_order)
        d1[k] = abs(psi1(float(b1[k])))
        if not one_sided:
            psi2 = _make_residual(spec, grid, b1, b2, k, mode, 2, float(b1[k]), config.quad_order)
            d2[k] = abs(psi2(float(b2[k])))
    return d1, d2


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Self-convergence study: re-solves on refined grids and compares."""

    factors: tuple[int, ...]
    tables: tuple[BoundaryTable, ...]
    b1_diffs: tuple[float, ...]
    b2_diffs: tuple[float, ...]
    t_stars: tuple[float, ...]

    @property
    def decreasing(self) -> bool:
        """True when successive common-grid differences shrink."""
        return all(b <= a for a, b in zip(self.b1_diffs[:-1], self.b1_diffs[1:]))


def _common_grid_diff(coarse: BoundaryTable, fine: BoundaryTable, which: str) -> float:
    ratio = (len(fine.grid) - 1) // (len(coarse.grid) - 1)
    a = getattr(coarse, which)[:-1]
    b = getattr(fine, which)[:-1:ratio][: len(a)]
    both = np.isfinite(a) & np.isfinite(b)
    if not both.any():
        return 0.0
    return float(np.max(np.abs(a[both] - b[both])))


def refine_convergence(spec: ProblemSpec, config: SolverConfig, factors=(1, 2, 4)) -> ConvergenceReport:
    """Re-solve on grids n*f for f in factors and report common-grid drifts.

    Factors must be positive and ascending, each dividing the next so the
    coarse grid times embed in the fine ones.
    """
    factors = tuple(int(f) for f in factors)
    if len(factors) == 0 or any(f < 1 for f in factors) or list(factors) != sorted(factors):
        raise ConfigError(f"factors must be ascending positive integers, got {factors!r}")
    for a, b in zip(factors[:-1], factors[1:]):
        if b % a != 0:
            raise ConfigError(f"each factor must divide the next, got {factors!r}")

    tables = []
    for f in factors:
        cfg = SolverConfig(
            n_steps=config.n_steps * f,
            quad_order=config.quad_order,
            root_tol=config.root_tol,
            level_tol=config.level_tol,
            merge_gap=config.merge_gap,
        )
        tables.append(solve_boundaries(spec, cfg))
    b1_diffs = tuple(
        _common_grid_diff(a, b, "b1") for a, b in zip(tables[:-1], tables[1:])
    )
    b2_diffs = tuple(
        _common_grid_diff(a, b, "b2") for a, b in zip(tables[:-1], tables[1:])
    )
    t_stars = tuple(t.t_star for t in tables)
    return ConvergenceReport(factors, tuple(tables), b1_diffs, b2_diffs, t_stars)
