"""Expected-gain surface G, its derivatives, and the source function H.

Oracles: closed forms at the horizon, exact-law simulation for interior
points, and finite differences of G for every derivative.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from maxstop.distributions import std_normal_pdf
from maxstop.gain import (
    adaptive_gauss_legendre,
    gain,
    gain_t,
    gain_x,
    h_function,
    h_time_derivative,
)
from maxstop.mc import simulate
from maxstop.problem import ProblemSpec


MU0 = ProblemSpec(mu=0.0)
MU1 = ProblemSpec(mu=1.0)
MU05 = ProblemSpec(mu=0.5)


# ------------------------------------------------------------------ G itself


def test_gain_at_horizon_is_square():
    # No time left: the payoff is locked in at (x - 0)^2 ... = x^2.
    assert gain(MU0, 1.0, 1.5) == pytest.approx(2.25, abs=1e-12)
    assert gain(MU1, 1.0, 0.3) == pytest.approx(0.09, abs=1e-12)


def test_gain_zero_drift_at_origin():
    # E (S_1 - B_1)^2 with S_1 - B_1 =law= |B_1|, so the mean square is 1.
    assert gain(MU0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-10)


def test_gain_against_exact_simulation():
    # Stopping at gap x pays (S_T - B_t)^2 = (max(x, S'))^2, where S' is
    # the running max of a fresh drifted motion over the remaining time.
    spec = MU05
    t, x = 0.4, 0.6
    sub = ProblemSpec(mu=spec.mu, T=spec.T - t)
    batch = simulate(sub, dt=sub.T / 600, n_paths=262144, seed=5)
    total = total_sq = 0.0
    for _, s in batch.iter_blocks():
        samples = np.maximum(s[:, -1], x) ** 2
        total += float(samples.sum())
        total_sq += float((samples * samples).sum())
    n = batch.n_paths
    mean = total / n
    se = math.sqrt(max(total_sq / n - mean * mean, 0.0) / n)
    assert abs(mean - gain(spec, t, x)) <= 3 * se


def test_gain_monotone_in_gap():
    xs = np.linspace(0.0, 3.0, 31)
    vals = np.array([gain(MU1, 0.2, float(x)) for x in xs])
    assert np.all(np.diff(vals) > 0.0)


def test_gain_rejects_bad_points():
    with pytest.raises(ValueError):
        gain(MU0, 0.5, -0.1)
    from maxstop.errors import ConfigError

    with pytest.raises(ConfigError):
        gain(MU0, 1.5, 0.1)


# ------------------------------------------------------------- derivatives


def test_gain_t_vanishes_for_huge_gap():
    # The max is unreachable: waiting changes nothing.
    assert abs(gain_t(MU0, 0.0, 12.0)) < 1e-10


def test_gain_t_at_origin_zero_drift():
    # Freeze against the quadrature oracle: differentiate the integral
    # representation of G in t directly (the gap law does not move at
    # x = 0+, only the remaining-time argument does).
    val = float(gain_t(MU0, 0.0, 0.0))
    tau_hi, tau_lo = 1.0, 1.0 - 1e-6

    def g_of_tau(tau):
        # G(t,0) = E S_tau^2 = integral of 2 z P(S_tau > z) dz.
        return adaptive_gauss_legendre(
            lambda z: 2.0 * z * 2.0 * _phi_bar(z / np.sqrt(tau)), 0.0, 12.0, tol=1e-12
        )

    fd = (g_of_tau(tau_lo) - g_of_tau(tau_hi)) / (tau_hi - tau_lo)
    assert val == pytest.approx(fd, abs=1e-5)
    assert val == pytest.approx(-1.0, abs=1e-9)


def _phi_bar(z):
    # Vectorized upper tail of the standard normal (the integrator
    # evaluates its integrand on arrays of nodes).
    from scipy.special import erfc

    return 0.5 * erfc(z / math.sqrt(2.0))


@pytest.mark.parametrize("spec,t,x", [(MU0, 0.3, 0.5), (MU1, 0.6, 0.8), (MU05, 0.25, 0.0)])
def test_gain_t_matches_finite_difference(spec, t, x):
    h = 1e-5
    fd = (gain(spec, t + h, x) - gain(spec, t - h, x)) / (2 * h)
    assert float(gain_t(spec, t, x)) == pytest.approx(fd, abs=1e-5)


def test_gain_x_at_zero_gap_is_zero():
    for spec in (MU0, MU1, ProblemSpec(mu=-0.5)):
        assert float(gain_x(spec, 0.3, 0.0)) == pytest.approx(0.0, abs=1e-12)


def test_gain_x_at_horizon():
    assert float(gain_x(MU1, 1.0, 0.7)) == pytest.approx(1.4, abs=1e-12)


@pytest.mark.parametrize("spec,t,x", [(MU0, 0.5, 0.9), (MU1, 0.2, 0.4), (MU05, 0.75, 1.3)])
def test_gain_x_matches_finite_difference(spec, t, x):
    h = 1e-5
    fd = (gain(spec, t, x + h) - gain(spec, t, x - h)) / (2 * h)
    assert float(gain_x(spec, t, x)) == pytest.approx(fd, abs=1e-6)


# ------------------------------------------------------------------------ H


def test_h_at_zero_gap_zero_drift():
    for t in (0.0, 0.3, 0.9):
        assert float(h_function(MU0, t, 0.0)) == pytest.approx(-1.0, abs=1e-10)


def test_h_horizon_limit():
    # As t -> T the source tends to 1 - 2*mu*x.
    assert float(h_function(MU1, 1.0, 0.25)) == pytest.approx(0.5, abs=1e-12)
    vals = [float(h_function(MU1, 1.0 - eps, 0.25)) for eps in (1e-3, 1e-5, 1e-7)]
    assert vals[-1] == pytest.approx(0.5, abs=1e-3)
    assert abs(vals[2] - 0.5) < abs(vals[0] - 0.5)


@pytest.mark.parametrize("spec,t,x", [(MU1, 0.4, 0.6), (MU0, 0.5, 0.8), (MU05, 0.3, 1.1)])
def test_h_is_generator_applied_to_gain(spec, t, x):
    # H = G_t - mu*G_x + 0.5*G_xx, with G_xx from a finite difference of G_x.
    h = 1e-5
    gxx = (float(gain_x(spec, t, x + h)) - float(gain_x(spec, t, x - h))) / (2 * h)
    lhs = float(h_function(spec, t, x))
    rhs = float(gain_t(spec, t, x)) - spec.mu * float(gain_x(spec, t, x)) + 0.5 * gxx
    assert lhs == pytest.approx(rhs, abs=1e-4)


def test_h_time_derivative_sign_and_value():
    assert float(h_time_derivative(MU1, 0.5, 0.3)) > 0.0
    # Zero drift closed form: 2*x*(T-t)^(-3/2) * phi(x/sqrt(T-t)).
    t, x = 0.5, 1.0
    tau = 1.0 - t
    expected = 2.0 * x * tau ** -1.5 * float(std_normal_pdf(x / math.sqrt(tau)))
    assert expected == pytest.approx(0.8302149948, abs=1e-9)
    assert float(h_time_derivative(MU0, t, x)) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("spec,t,x", [(MU1, 0.5, 0.3), (MU0, 0.2, 0.7), (MU05, 0.6, 0.1)])
def test_h_time_derivative_matches_finite_difference(spec, t, x):
    h = 1e-5
    fd = (float(h_function(spec, t + h, x)) - float(h_function(spec, t - h, x))) / (2 * h)
    assert float(h_time_derivative(spec, t, x)) == pytest.approx(fd, abs=1e-5)


def test_adaptive_quadrature_on_known_integral():
    val = adaptive_gauss_legendre(np.exp, 0.0, 1.0, tol=1e-12)
    assert val == pytest.approx(math.e - 1.0, abs=1e-12)
