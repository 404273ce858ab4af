"""Brute-force dynamic-programming oracle for the stopping problem.

Independent cross-check of the integral-equation solver: discretize time
and state, then run plain backward induction

    V(t_n, x) = x^2,
    V(t_k, x) = min( G(t_k, x),  E_x[ V(t_{k+1}, X_h) ] ),

with the one-step expectation computed by quadrature against the exact
transition density of the gap process X.  The stopping set read off the
min() is a band per time row; its edges and the root-value V(0, 0) serve
as oracles for the Volterra boundaries and the value engine.

Transition density.  For X_0 = x >= 0 and step u, X_u = max(x, S_u) - B_u
splits over whether the running maximum S_u stays below x (the gap is then
x - B_u, with the reflection-formula law of B_u restricted to S_u <= x) or
exceeds it (the gap is S_u - B_u, integrating the joint density over
maxima above x).  Both pieces are closed forms in the normal cdf/pdf; the
test suite verifies the density integrates to one and matches empirical
histograms of exact samples.

This module is deliberately naive — dense matrices, no refinement — and
shares nothing with the solver beyond the closed-form gain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .distributions import SQRT_2PI, tilted_cdf
from .errors import MismatchError
from .gain import gain_raw, gl_nodes
from .problem import ProblemSpec

__all__ = [
    "MONITORING_BETA",
    "DpResult",
    "transition_density",
    "solve_dp",
    "compare_bands",
]

# First-order boundary displacement of a stopping rule that is only allowed
# to act on a time grid of step h: the discrete rule's band edges sit a
# distance MONITORING_BETA * sqrt(h) into the continuation region of the
# continuously-monitored problem (unit diffusion coefficient).  Standard
# constant -zeta(1/2)/sqrt(2*pi) from the theory of discretely monitored
# boundary crossings.
MONITORING_BETA = 0.5825971579390107


def transition_density(mu: float, u: float, x: float, w) -> np.ndarray:
    """Density of X_u = max(x, S^mu_u) - B^mu_u at w >= 0, for X_0 = x.

    Piece 1 (maximum stays at x): b = x - w with S_u <= x,
        [phi((x-w-mu u)/ru) - exp(2 mu x) phi((-x-w-mu u)/ru)] / ru.
    Piece 2 (maximum moves above x): closed-form integral of the joint
    density of (B_u, S_u) over maxima s > max(x, w-ish region), obtained
    by integrating q exp(-q^2/(2u) + mu q) in q = 2s - b from x + w.
    """
    w = np.asarray(w, dtype=float)
    ru = np.sqrt(u)
    # Piece 1: reflection formula for P(B in db, S <= x), b = x - w.
    p1 = (
        np.exp(-0.5 * ((x - w - mu * u) / ru) ** 2)
        - np.exp(2.0 * mu * x - 0.5 * ((-x - w - mu * u) / ru) ** 2)
    ) / (ru * SQRT_2PI)
    # Piece 2: integral over maxima above x; a = x + w.
    a = x + w
    front = np.sqrt(2.0 / np.pi) / ru * np.exp(-2.0 * mu * w - 0.5 * mu * mu * u)
    inner = np.exp(-0.5 * a * a / u + mu * a) + mu * SQRT_2PI * ru * tilted_cdf(
        0.5 * mu * mu * u, -(a - mu * u) / ru
    )
    p2 = front * inner
    return np.where(w >= 0.0, np.maximum(p1, 0.0) + p2, 0.0)


@dataclass(frozen=True, eq=False)
class DpResult:
    """Backward-induction output on the (time, level) lattice."""

    spec: ProblemSpec
    times: np.ndarray
    levels: np.ndarray
    values: np.ndarray      # shape (n_times, n_levels)
    stop_mask: np.ndarray   # True where immediate stop is optimal
    band_lo: np.ndarray     # lowest stopping level per time (NaN if none)
    band_hi: np.ndarray     # highest stopping level per time (NaN/inf)

    @property
    def cell(self) -> float:
        """State-grid spacing."""
        return float(self.levels[1] - self.levels[0])

    @property
    def monitoring_offset(self) -> float:
        """Expected inward displacement of the discrete-rule band edges.

        Because the lattice rule may only stop at grid times, its stopping
        band is wider than the continuous one by about this much on each
        side (first-order in the time step).
        """
        h = float(self.times[1] - self.times[0])
        return MONITORING_BETA * np.sqrt(h)


def solve_dp(
    spec: ProblemSpec,
    n_time: int = 64,
    n_levels: int = 256,
    x_max: float | None = None,
    quad_per_panel: int = 16,
) -> DpResult:
    """Backward induction on a dense lattice with quadrature transitions.

    The one-step expectation integrates the transition density against a
    monotone (PCHIP) interpolant of the next-time values, on Gauss-Legendre
    panels spanning [0, x_big]; beyond the lattice top the continuation
    value is extended by the gain (far above the band the two agree to
    within the lattice tolerance).
    """
    mu, T = spec.mu, spec.T
    if x_max is None:
        x_max = max(3.0, -min(mu, 0.0) * T + 5.0 * np.sqrt(T))
    times = np.linspace(0.0, T, n_time + 1)
    h = T / n_time
    levels = np.linspace(0.0, x_max, n_levels)

    # Quadrature nodes for the one-step expectation, fixed across steps.
    x_big = x_max + 8.0 * np.sqrt(T)
    panel_edges = np.concatenate(
        [np.linspace(0.0, 4.0 * np.sqrt(h), 33), np.linspace(4.0 * np.sqrt(h), x_big, 97)[1:]]
    )
    glx, glw = gl_nodes(quad_per_panel)
    half = 0.5 * np.diff(panel_edges)
    mid = 0.5 * (panel_edges[:-1] + panel_edges[1:])
    w_nodes = (mid[:, None] + half[:, None] * glx[None, :]).ravel()
    w_weights = (half[:, None] * glw[None, :]).ravel()

    # Transition matrix: row i integrates against density from levels[i].
    trans = np.empty((n_levels, len(w_nodes)))
    for i, x in enumerate(levels):
        trans[i] = transition_density(mu, h, float(x), w_nodes) * w_weights
    row_mass = trans.sum(axis=1)

    gains = np.empty((n_time + 1, n_levels))
    for k, t in enumerate(times):
        gains[k] = [gain_raw(mu, T, float(t), float(x)) for x in levels]

    values = np.empty((n_time + 1, n_levels))
    stop_mask = np.zeros((n_time + 1, n_levels), dtype=bool)
    values[n_time] = levels**2
    stop_mask[n_time] = True

    beyond = w_nodes > x_max
    for k in range(n_time - 1, -1, -1):
        interp = PchipInterpolator(levels, values[k + 1], extrapolate=True)
        next_vals = interp(w_nodes)
        if beyond.any():
            g_beyond = np.array(
                [gain_raw(mu, T, float(times[k + 1]), float(wn)) for wn in w_nodes[beyond]]
            )
            next_vals[beyond] = g_beyond
        continue_vals = trans @ next_vals
        # Renormalize the tiny truncated tail mass onto the continuation value.
        continue_vals += (1.0 - row_mass) * next_vals[-1]
        values[k] = np.minimum(gains[k], continue_vals)
        stop_mask[k] = gains[k] <= continue_vals + 1e-12

    band_lo = np.full(n_time + 1, np.nan)
    band_hi = np.full(n_time + 1, np.nan)
    for k in range(n_time + 1):
        idx = np.where(stop_mask[k])[0]
        if idx.size:
            band_lo[k] = levels[idx[0]]
            band_hi[k] = np.inf if idx[-1] == n_levels - 1 else levels[idx[-1]]
    return DpResult(spec, times, levels, values, stop_mask, band_lo, band_hi)


@dataclass(frozen=True, eq=False)
class BandComparison:
    """Per-row distance between the lattice band edges and a boundary table.

    Distances are in units of state-grid cells, after shifting the lattice
    edges back by the monitoring offset (the discrete rule widens the band
    by that amount on each side).  NaN marks rows where neither side has a
    band; `existence_mismatches` counts rows where exactly one side does.
    The final interior row is reported separately (`endgame_cells`): with a
    single decision left the lattice rule can stop everywhere even though
    the continuous band edge is still O(sqrt(h)) above zero, so that row
    measures the time discretization rather than either solver.
    """

    rows: np.ndarray
    lo_cells: np.ndarray
    hi_cells: np.ndarray
    existence_mismatches: int
    endgame_cells: float
    offset: float
    cell: float

    @property
    def max_cells(self) -> float:
        """Largest corrected edge distance over compared rows."""
        both = np.concatenate([self.lo_cells, self.hi_cells])
        both = both[np.isfinite(both)]
        return float(both.max()) if both.size else 0.0


def compare_bands(dp: DpResult, table) -> BandComparison:
    """Measure lattice stopping-band edges against solved boundaries.

    Rows compared are the interior times t_k < T excluding the final one;
    see BandComparison for why that row is split out.
    """
    if table.spec != dp.spec:
        raise MismatchError(f"table solved for {table.spec}, lattice for {dp.spec}")
    offset = dp.monitoring_offset
    cell = dp.cell
    n = len(dp.times) - 1
    rows = np.arange(n - 1)
    lo_cells = np.full(n - 1, np.nan)
    hi_cells = np.full(n - 1, np.nan)
    mismatches = 0
    for k in rows:
        t = float(dp.times[k])
        b1, b2 = table.band_at(t)
        dp_has = np.isfinite(dp.band_lo[k])
        ref_has = np.isfinite(b1)
        if dp_has != ref_has:
            mismatches += 1
            continue
        if not ref_has:
            continue
        lo_cells[k] = abs(dp.band_lo[k] + offset - b1) / cell
        if np.isinf(b2):
            # Lattice band reaching the grid top encodes an unbounded band.
            if not np.isinf(dp.band_hi[k]):
                mismatches += 1
        else:
            hi_cells[k] = abs(dp.band_hi[k] - offset - b2) / cell
    b1_last, _ = table.band_at(float(dp.times[n - 1]))
    if np.isfinite(dp.band_lo[n - 1]) and np.isfinite(b1_last):
        endgame = abs(dp.band_lo[n - 1] + offset - b1_last) / cell
    else:
        endgame = np.nan
    return BandComparison(rows, lo_cells, hi_cells, mismatches, float(endgame), offset, cell)
