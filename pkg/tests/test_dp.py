"""Backward-induction lattice oracle for the gap process.

Oracles: quadrature mass/mean checks of the one-step transition law
against the exact sampler, and structural checks of the stopping set.
The full comparison against the solved boundaries at production
resolution happens in the acceptance tests.
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from maxstop.dp import MONITORING_BETA, compare_bands, solve_dp, transition_density
from maxstop.errors import MismatchError
from maxstop.kernels import sample_X
from maxstop.problem import ProblemSpec
from maxstop.solver import SolverConfig, solve_boundaries


def test_monitoring_constant():
    # -zeta(1/2) / sqrt(2*pi), the universal grid-monitoring displacement.
    assert MONITORING_BETA * math.sqrt(2.0 * math.pi) == pytest.approx(
        1.4603545088095868, abs=1e-12
    )


@pytest.mark.parametrize(
    "mu,u,x",
    [(0.0, 0.1, 0.0), (0.0, 0.5, 0.7), (1.0, 0.25, 0.3), (-0.5, 0.4, 1.2), (2.0, 0.05, 0.0)],
)
def test_transition_density_mass(mu, u, x):
    top = x + abs(mu) * u + 14.0 * math.sqrt(u)
    mass, err = integrate.quad(
        lambda w: float(transition_density(mu, u, x, np.array([w]))[0]),
        0.0,
        top,
        epsabs=1e-11,
        limit=300,
    )
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert err < 1e-9


@pytest.mark.parametrize("mu,u,x", [(0.0, 0.3, 0.2), (1.0, 0.2, 0.5), (-0.5, 0.5, 0.0)])
def test_transition_density_mean_matches_sampler(mu, u, x):
    spec = ProblemSpec(mu=mu)
    top = x + abs(mu) * u + 14.0 * math.sqrt(u)
    mean_quad, _ = integrate.quad(
        lambda w: w * float(transition_density(mu, u, x, np.array([w]))[0]),
        0.0,
        top,
        epsabs=1e-11,
        limit=300,
    )
    xs = sample_X(spec, x, u, 200_000, seed=23)
    se = float(np.std(xs) / math.sqrt(len(xs)))
    assert abs(mean_quad - float(np.mean(xs))) <= 3 * se


def test_transition_density_zero_below_support():
    p = transition_density(0.5, 0.2, 0.3, np.array([-0.1, -1.0]))
    assert np.all(p == 0.0)


def test_lattice_shapes_and_terminal_row(dp_mu0):
    n_time = len(dp_mu0.times) - 1
    assert dp_mu0.values.shape == (n_time + 1, len(dp_mu0.levels))
    assert np.array_equal(dp_mu0.values[-1], dp_mu0.levels**2)
    assert np.all(np.isfinite(dp_mu0.values))
    assert dp_mu0.cell == pytest.approx(dp_mu0.levels[1] - dp_mu0.levels[0])
    assert dp_mu0.monitoring_offset == pytest.approx(
        MONITORING_BETA * math.sqrt(dp_mu0.times[1] - dp_mu0.times[0])
    )


def test_stop_set_is_contiguous_band(dp_mu0):
    mask = dp_mu0.stop_mask
    for k in range(mask.shape[0] - 1):
        row = mask[k]
        if not row.any():
            continue
        first, last = np.argmax(row), len(row) - 1 - np.argmax(row[::-1])
        assert np.all(row[first : last + 1])
        assert not row[:first].any()
        # One-sided problem: the stop set reaches the top of the lattice.
        assert last == len(row) - 1
        assert dp_mu0.band_lo[k] == pytest.approx(dp_mu0.levels[first])
        assert math.isinf(dp_mu0.band_hi[k])


def test_origin_value_below_immediate_gain(dp_mu0):
    # Stopping immediately at the origin yields E S_T^2 = 1 at zero
    # drift; the lattice policy must do strictly better.
    assert 0.0 < dp_mu0.values[0, 0] < 1.0


def test_compare_bands_zero_drift(dp_mu0, spec_mu0):
    table = solve_boundaries(spec_mu0, SolverConfig(n_steps=64))
    cmp = compare_bands(dp_mu0, table)
    assert cmp.existence_mismatches == 0
    assert cmp.max_cells <= 2.0
    assert cmp.offset == pytest.approx(dp_mu0.monitoring_offset)
    # The final interior row is measured separately: a one-step endgame
    # tie makes the lattice stop everywhere there.
    assert math.isfinite(cmp.endgame_cells)


def test_compare_bands_requires_matching_spec(dp_mu0, table_mu1):
    with pytest.raises(MismatchError):
        compare_bands(dp_mu0, table_mu1)
