"""Value surface V(t, x) evaluated from a solved boundary table.

The value of the stopping problem admits the representation

    V(t, x) = J(t, x) - integral_0^{T-t} K(t, x, t+u, b1(t+u), b2(t+u)) du

(with K replaced by the one-sided L when mu <= 0).  This module evaluates
that representation with the same discretization zones the solver used to
produce the table — sqrt-substituted Gauss-Legendre panels at both ends of
the window, composite trapezoid between — so the value and the boundaries
share one notion of the time integral.  Off-grid query times prepend one
partial panel whose band values are linearly interpolated from the table.

The exact value never exceeds the immediate-stop gain G; the evaluated
representation can exceed it by discretization error (a few 1e-3 inside
the stopping band on coarse grids), so ``value_at`` caps the product value
at G and classification uses the capped value.  Diagnostics report the raw
gap separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MismatchError
from .gain import gain_raw, gain_x_raw, gl_nodes
from .problem import ProblemSpec
from .quadrature import MODE_J, MODE_K, MODE_L, xmax_expectation
from .solver import _ORDER_BODY, _ORDER_EDGE, M_SHIELD, BoundaryTable, _interp_sqrt

__all__ = ["ValueResult", "value_at", "diagnostics", "DiagnosticsReport"]

#: Stopping-region label tolerance: g - v <= CLASSIFY_TOL * (1 + g).
CLASSIFY_TOL = 1e-4


@dataclass(frozen=True)
class ValueResult:
    """Value v = V(t,x), gain g = G(t,x), and the region label of (t,x)."""

    v: float
    g: float
    region: str

    def __post_init__(self) -> None:
        if self.region not in ("continuation", "stopping"):
            raise ValueError(f"unknown region label {self.region!r}")


def _band_interp(T, t, ta, va, tb, vb) -> float:
    """Band edge between knots for the value quadrature; NaN when absent."""
    a_ok, b_ok = np.isfinite(va), np.isfinite(vb)
    if np.isinf(va) and np.isinf(vb):
        return np.inf
    if not (a_ok and b_ok):
        return np.nan
    return _interp_sqrt(T, t, ta, va, tb, vb)


def _value_panel(spec, t, x, u0, u1, ta, ya, za, tb, yb, zb, mode, order, terminal, edge):
    """One sqrt-substituted Gauss-Legendre panel of the value time integral.

    ``terminal`` picks the substitution direction (v = sqrt(T - t - u) at
    the horizon end, v = sqrt(u) at the query end); ``edge`` upgrades the
    panel to the higher Gauss-Legendre order used on the two boundary-
    critical panels.
    """
    vg, wg = gl_nodes(_ORDER_EDGE if edge else _ORDER_BODY)
    T = spec.T
    if terminal:
        a, b = np.sqrt(T - t - u1), np.sqrt(T - t - u0)
    else:
        a, b = np.sqrt(u0), np.sqrt(u1)
    nodes = 0.5 * (b - a) * (vg + 1.0) + a
    weights = 0.5 * (b - a) * wg
    total = 0.0
    for vi, wi in zip(nodes, weights):
        u = (T - t - vi * vi) if terminal else vi * vi
        y = _band_interp(T, t + u, ta, ya, tb, yb)
        z = _band_interp(T, t + u, ta, za, tb, zb)
        if np.isnan(y) or np.isnan(z):
            continue  # band not yet born: the source term vanishes
        total += wi * 2.0 * vi * xmax_expectation(
            spec.mu, u, x, y, z, T - t - u, mode, order=order
        )
    return total


def value_raw(spec: ProblemSpec, table: BoundaryTable, t: float, x: float, order: int = 32) -> float:
    """Uncapped evaluation of the value representation at (t, x)."""
    if table.spec != spec:
        raise MismatchError(
            f"table solved for {table.spec}, queried with {spec}"
        )
    t = spec.check_time(t)
    if x < 0.0:
        raise ValueError(f"state must be nonnegative, got {x!r}")
    T, mu = spec.T, spec.mu
    if t == T:
        return x * x
    mode = MODE_L if mu <= 0.0 else MODE_K

    grid, b1, b2 = table.grid, table.b1, table.b2
    n = len(grid) - 1
    # Knot sequence: t itself, then every grid time strictly beyond t.
    k0 = int(np.searchsorted(grid, t, side="right"))
    lo1, lo2 = table.band_at(t)
    knot_t = np.concatenate(([t], grid[k0:]))
    knot_b1 = np.concatenate(([lo1], b1[k0:]))
    knot_b2 = np.concatenate(([lo2], b2[k0:]))
    m = len(knot_t) - 1  # number of panels

    m_lo = min(M_SHIELD, m)
    m_hi = min(M_SHIELD, m - m_lo)
    j_lo, j_hi = m_lo, m - m_hi

    q = 0.0
    for j in range(m_lo):
        q += _value_panel(
            spec, t, x, knot_t[j] - t, knot_t[j + 1] - t,
            knot_t[j], knot_b1[j], knot_b2[j],
            knot_t[j + 1], knot_b1[j + 1], knot_b2[j + 1],
            mode, order, terminal=False, edge=(j == 0),
        )
    for j in range(m - m_hi, m):
        q += _value_panel(
            spec, t, x, knot_t[j] - t, knot_t[j + 1] - t,
            knot_t[j], knot_b1[j], knot_b2[j],
            knot_t[j + 1], knot_b1[j + 1], knot_b2[j + 1],
            mode, order, terminal=True, edge=(j == m - 1),
        )
    if j_lo < j_hi:
        h = grid[1] - grid[0]
        for j in range(j_lo, j_hi + 1):
            wj = h if j_lo < j < j_hi else 0.5 * h
            if np.isnan(knot_b1[j]) or np.isnan(knot_b2[j]):
                continue
            q += wj * xmax_expectation(
                spec.mu, knot_t[j] - t, x, knot_b1[j], knot_b2[j],
                T - knot_t[j], mode, order=order,
            )
    jval = xmax_expectation(mu, T - t, x, 0.0, np.inf, 0.0, MODE_J, order=order)
    return jval - q


def value_at(spec: ProblemSpec, table: BoundaryTable, t: float, x: float, order: int = 32) -> ValueResult:
    """Value, gain, and region label at (t, x) from the solved table.

    The point is labeled ``stopping`` when g - v <= 1e-4 * (1 + g),
    ``continuation`` otherwise.
    """
    raw = value_raw(spec, table, t, x, order=order)
    g = gain_raw(spec.mu, spec.T, spec.check_time(t), float(x))
    v = min(raw, g)
    region = "stopping" if g - v <= CLASSIFY_TOL * (1.0 + g) else "continuation"
    return ValueResult(v, g, region)


# -------------------------------------------------------------- diagnostics


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    """Free-boundary health checks evaluated on a probe grid.

    All entries are report-only; tolerances live in the caller.  Slopes are
    one-sided finite differences with step ``fd_step`` (default 1e-3).
    """

    spec: ProblemSpec
    probe_times: np.ndarray
    smooth_fit_b1: list
    smooth_fit_b2: list
    normal_reflection: list
    ordering_max: float
    ordering_max_raw: float
    monotonicity_violation: float
    fd_step: float = field(default=1e-3)

    def rows(self):
        """Flat (check, t, value) triples for tabular export."""
        out = []
        for t, d in self.smooth_fit_b1:
            out.append(("smooth_fit_b1", t, d))
        for t, d in self.smooth_fit_b2:
            out.append(("smooth_fit_b2", t, d))
        for t, d in self.normal_reflection:
            out.append(("normal_reflection", t, d))
        out.append(("ordering_max", np.nan, self.ordering_max))
        out.append(("ordering_max_raw", np.nan, self.ordering_max_raw))
        out.append(("monotonicity_violation", np.nan, self.monotonicity_violation))
        return out


def diagnostics(
    spec: ProblemSpec,
    table: BoundaryTable,
    probe_times=None,
    probe_levels=None,
    fd_step: float = 1e-3,
) -> DiagnosticsReport:
    """Check smooth fit, normal reflection, ordering, and monotonicity.

    * smooth fit: one-sided slope of V at each boundary vs. gain_x there,
      from the continuation side (below b1, above b2);
    * normal reflection: |V_x(t, 0+)|;
    * ordering: max of v - g over the probe grid, for both the capped
      product value and the raw representation;
    * monotonicity: largest decrease of x -> V(t, x) over the probe grid.
    """
    if table.spec != spec:
        raise MismatchError(f"table solved for {table.spec}, queried with {spec}")
    if probe_times is None:
        lo = table.t_star if table.t_star > 0.0 else 0.0
        probe_times = np.unique(np.clip(
            lo + np.array([0.1, 0.35, 0.6, 0.85]) * (spec.T - lo) , 0.0, spec.T * (1 - 1e-9)
        ))
    probe_times = np.asarray(probe_times, dtype=float)
    if probe_levels is None:
        finite_b2 = table.b2[np.isfinite(table.b2)]
        top = max(3.0, 1.5 * float(np.nanmax(table.b1)) if np.isfinite(table.b1).any() else 3.0)
        if finite_b2.size:
            top = max(top, 1.5 * float(finite_b2.max()))
        probe_levels = np.linspace(0.0, top, 13)
    probe_levels = np.asarray(probe_levels, dtype=float)

    def v_of(t, x):
        return value_raw(spec, table, t, x)

    smooth1, smooth2, reflect = [], [], []
    ordering_raw = -np.inf
    ordering_capped = -np.inf
    mono_violation = 0.0
    for t in probe_times:
        tau = spec.T - t
        lo, hi = table.band_at(t)
        if np.isfinite(lo) and lo > fd_step:
            slope = (v_of(t, lo) - v_of(t, lo - fd_step)) / fd_step
            smooth1.append((float(t), abs(slope - gain_x_raw(spec.mu, tau, lo))))
        if np.isfinite(hi):
            slope = (v_of(t, hi + fd_step) - v_of(t, hi)) / fd_step
            smooth2.append((float(t), abs(slope - gain_x_raw(spec.mu, tau, hi))))
        reflect.append((float(t), abs((v_of(t, fd_step) - v_of(t, 0.0)) / fd_step)))

        prev_v = None
        for x in probe_levels:
            raw = v_of(t, float(x))
            g = gain_raw(spec.mu, spec.T, float(t), float(x))
            ordering_raw = max(ordering_raw, raw - g)
            ordering_capped = max(ordering_capped, min(raw, g) - g)
            v = min(raw, g)
            if prev_v is not None and v < prev_v:
                mono_violation = max(mono_violation, prev_v - v)
            prev_v = v

    return DiagnosticsReport(
        spec=spec,
        probe_times=probe_times,
        smooth_fit_b1=smooth1,
        smooth_fit_b2=smooth2,
        normal_reflection=reflect,
        ordering_max=float(ordering_capped),
        ordering_max_raw=float(ordering_raw),
        monotonicity_violation=float(mono_violation),
        fd_step=fd_step,
    )
