"""Zero-level curves of the source function H.

Oracles: the zero-drift closed form (quartile of the normal), the
horizon limits, and sign checks of H around the computed levels.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from maxstop.curves import gamma1_level, gamma2_level, gamma_curves
from maxstop.gain import h_function
from maxstop.problem import ProblemSpec

MU0 = ProblemSpec(mu=0.0)
MU1 = ProblemSpec(mu=1.0)
MUN = ProblemSpec(mu=-0.5)

# Phi^{-1}(3/4): the gap level where 2*Phi(x) - 1 = 1/2.
QUARTILE = 0.6744897501960815


def test_gamma1_zero_drift_closed_form():
    # H(t, x) = 0 iff 2*Phi(x/sqrt(T-t)) - 1 = 1/2 when mu = 0.
    for t in (0.0, 0.25, 0.7, 0.96):
        expected = QUARTILE * math.sqrt(1.0 - t)
        assert gamma1_level(MU0, t) == pytest.approx(expected, abs=1e-9)


def test_gamma1_horizon_limit_is_zero():
    assert gamma1_level(MU0, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert gamma1_level(MU1, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_gamma2_horizon_value_positive_drift():
    assert gamma2_level(MU1, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_gamma2_infinite_without_positive_drift():
    for spec in (MU0, MUN):
        assert gamma2_level(spec, 0.5) == math.inf


def test_h_sign_pattern_around_levels():
    # H < 0 below gamma1, > 0 between the levels, < 0 above gamma2.
    # For mu = 1 the window only opens late in the horizon.
    t = 0.98
    g1, g2 = gamma1_level(MU1, t), gamma2_level(MU1, t)
    assert 0.0 < g1 < g2 < math.inf
    assert float(h_function(MU1, t, 0.5 * g1)) < 0.0
    assert float(h_function(MU1, t, 0.5 * (g1 + g2))) > 0.0
    assert float(h_function(MU1, t, g2 + 0.5)) < 0.0
    assert float(h_function(MU1, t, g1)) == pytest.approx(0.0, abs=1e-8)
    assert float(h_function(MU1, t, g2)) == pytest.approx(0.0, abs=1e-8)


def test_window_birth_time_positive_drift():
    # For strong positive drift the window opens strictly inside (0, T).
    spec = ProblemSpec(mu=4.0)
    curves = gamma_curves(spec, np.linspace(0.0, 1.0, 21))
    assert 0.0 < curves.u_star < 1.0
    before = curves.grid < curves.u_star - 1e-9
    after = curves.grid > curves.u_star + 1e-9
    assert np.all(np.isnan(curves.gamma1[before]))
    assert np.all(np.isfinite(curves.gamma1[after]))
    # Just before birth H is negative everywhere; just after, somewhere positive.
    t_lo = max(curves.u_star - 1e-3, 0.0)
    t_hi = min(curves.u_star + 1e-3, spec.T)
    xs = np.linspace(0.0, 2.0, 400)
    assert max(float(h_function(spec, t_lo, x)) for x in xs) < 0.0
    assert max(float(h_function(spec, t_hi, x)) for x in xs) > 0.0


def test_window_exists_from_start_zero_and_negative_drift():
    for spec in (MU0, MUN):
        curves = gamma_curves(spec, np.linspace(0.0, 1.0, 11))
        assert curves.u_star == 0.0
        assert np.all(np.isfinite(curves.gamma1))
        assert np.all(np.isinf(curves.gamma2))


def test_gamma1_hump_negative_drift():
    # gamma1 rises then falls for mu < 0; the turning point is interior.
    curves = gamma_curves(MUN, np.linspace(0.0, 1.0, 41))
    w = curves.w_star
    assert w is not None and 0.0 < w < 1.0
    g1 = curves.gamma1
    grid = curves.grid
    rising = grid[:-1] < w - 0.03
    falling = grid[:-1] > w + 0.03
    assert np.all(np.diff(g1)[rising[: len(np.diff(g1))]] > 0.0)
    assert np.all(np.diff(g1)[falling[: len(np.diff(g1))]] < 0.0)


def test_gamma1_monotone_decreasing_zero_drift():
    curves = gamma_curves(MU0, np.linspace(0.0, 1.0, 21))
    assert curves.w_star == 0.0
    assert np.all(np.diff(curves.gamma1) < 0.0)


def test_gamma_curves_requires_increasing_grid():
    with pytest.raises(ValueError):
        gamma_curves(MU0, np.array([0.0, 0.5, 0.4]))
    with pytest.raises(ValueError):
        gamma_curves(MU0, np.array([0.1, 0.5, 1.0]))
