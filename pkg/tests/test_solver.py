"""Free-boundary solver: terminal seeds, shape properties, self-checks.

Unit-scale grids here; the full-resolution runs live in the acceptance
tests.  Oracles: exact terminal values, the level curves as a sandwich,
the solver's own defect functional, and grid-refinement stability.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from maxstop.curves import gamma1_level, gamma2_level
from maxstop.errors import ConfigError
from maxstop.problem import ProblemSpec
from maxstop.solver import (
    SolverConfig,
    refine_convergence,
    residual_I,
    solve_boundaries,
    solve_defects,
)


# ------------------------------------------------------------- residual


def test_residual_vanishes_at_horizon():
    spec = ProblemSpec(mu=0.7)
    for x in (0.0, 0.3, 1.5):
        assert residual_I(spec, 1.0, x) == pytest.approx(0.0, abs=1e-12)


def test_residual_at_origin_zero_drift():
    # J(0,0) and G(0,0) are both the horizon second moment, so I = 0.
    assert residual_I(ProblemSpec(mu=0.0), 0.0, 0.0) == pytest.approx(0.0, abs=1e-7)


def test_residual_against_refined_quadrature():
    # The only discretization inside I is the J quadrature: refine it.
    from maxstop.gain import gain
    from maxstop.kernels import kernel_J

    spec, t, x = ProblemSpec(mu=1.0), 0.5, 0.1
    fine = kernel_J(spec, t, x, order=64) - gain(spec, t, x)
    assert residual_I(spec, t, x) == pytest.approx(fine, abs=1e-7)


# ------------------------------------------------------- terminal seeds


def test_terminal_seeds_exact(table_mu0, table_mu1, table_mun05):
    assert table_mu0.b1[-1] == 0.0
    assert table_mu1.b1[-1] == 0.0
    assert table_mun05.b1[-1] == 0.0
    assert table_mu1.b2[-1] == 0.5
    assert np.all(np.isinf(table_mu0.b2))
    assert np.all(np.isinf(table_mun05.b2))


# --------------------------------------------------------- shape: mu > 0


def test_positive_drift_band_is_late_and_finite(table_mu1):
    t_star = table_mu1.t_star
    assert 0.0 < t_star < 1.0
    in_band = table_mu1.grid >= t_star
    assert np.all(np.isfinite(table_mu1.b1[in_band]))
    assert np.all(np.isfinite(table_mu1.b2[in_band]))
    assert np.all(np.isnan(table_mu1.b1[~in_band]))
    b1, b2 = table_mu1.b1[in_band], table_mu1.b2[in_band]
    assert np.all(b1 < b2)


def test_positive_drift_monotonicity(table_mu1):
    fin = np.isfinite(table_mu1.b1)
    b1, b2 = table_mu1.b1[fin], table_mu1.b2[fin]
    assert np.all(np.diff(b1) <= 1e-6)
    assert np.all(np.diff(b2) >= -1e-6)


def test_positive_drift_sandwich(table_mu1, spec_mu1):
    fin = np.where(np.isfinite(table_mu1.b1))[0]
    for k in fin[::8]:
        t = float(table_mu1.grid[k])
        g1, g2 = gamma1_level(spec_mu1, t), gamma2_level(spec_mu1, t)
        assert g1 - 1e-4 <= table_mu1.b1[k] <= table_mu1.b2[k] <= g2 + 1e-4


# -------------------------------------------------------- shape: mu <= 0


def test_zero_drift_full_band_and_scale_shape(table_mu0):
    assert table_mu0.t_star == 0.0
    assert table_mu0.z_star == 0.0
    assert np.all(np.isfinite(table_mu0.b1))
    assert np.all(np.diff(table_mu0.b1) < 0.0)
    # Self-similar profile: b1 proportional to sqrt(T - t).
    grid, b1 = table_mu0.grid[:-1], table_mu0.b1[:-1]
    keep = grid <= 0.95
    ratio = b1[keep] / np.sqrt(1.0 - grid[keep])
    spread = (ratio.max() - ratio.min()) / ratio.mean()
    assert spread <= 2e-2


def test_negative_drift_hump(table_mun05):
    t = table_mun05.grid
    b1 = table_mun05.b1
    z = table_mun05.z_star
    assert z is not None and 0.0 < z < 1.0
    assert table_mun05.t_star == 0.0
    rising = np.diff(b1)[t[:-1] < z - table_mun05.step]
    falling = np.diff(b1)[t[:-1] >= z + table_mun05.step]
    assert rising.size and np.all(rising > 0.0)
    assert falling.size and np.all(falling < 0.0)
    assert b1[-1] == 0.0


def test_vanishing_drift_pushes_ceiling_up():
    # As the drift shrinks toward zero the upper edge escapes any level.
    table = solve_boundaries(ProblemSpec(mu=0.05), SolverConfig(n_steps=16))
    fin = np.isfinite(table.b2)
    assert np.all(table.b2[fin] > 5.0)


# ------------------------------------------------------------- defects


def test_solved_defects_small(spec_mu1, table_mu1):
    config = SolverConfig(n_steps=len(table_mu1.grid) - 1)
    d1, d2 = solve_defects(spec_mu1, table_mu1, config)
    assert np.nanmax(d1) <= 10 * config.root_tol
    assert np.nanmax(d2) <= 10 * config.root_tol


def test_solved_defects_small_one_sided(spec_mu0, table_mu0):
    config = SolverConfig(n_steps=len(table_mu0.grid) - 1)
    d1, d2 = solve_defects(spec_mu0, table_mu0, config)
    assert np.nanmax(d1) <= 10 * config.root_tol
    assert np.all(np.isnan(d2))


# -------------------------------------------------------- table queries


def test_band_at_matches_grid_and_interpolates(table_mu1):
    k = int(np.argmax(np.isfinite(table_mu1.b1))) + 1
    t0, t1 = float(table_mu1.grid[k]), float(table_mu1.grid[k + 1])
    assert table_mu1.band_at(t0) == (table_mu1.b1[k], table_mu1.b2[k])
    mid_lo, mid_hi = table_mu1.band_at(0.5 * (t0 + t1))
    assert mid_lo == pytest.approx(0.5 * (table_mu1.b1[k] + table_mu1.b1[k + 1]))
    assert mid_hi == pytest.approx(0.5 * (table_mu1.b2[k] + table_mu1.b2[k + 1]))
    assert table_mu1.band_at(1.0) == (0.0, 0.5)


def test_band_at_before_band_is_empty(table_mu1):
    lo, hi = table_mu1.band_at(0.1)
    assert math.isnan(lo) and math.isnan(hi)


def test_band_at_infinite_ceiling(table_mu0):
    lo, hi = table_mu0.band_at(0.33)
    assert math.isfinite(lo)
    assert hi == math.inf


# ------------------------------------------------- determinism, config


def test_identical_config_is_bitwise_identical(spec_mu1):
    cfg = SolverConfig(n_steps=16)
    a = solve_boundaries(spec_mu1, cfg)
    b = solve_boundaries(spec_mu1, cfg)
    assert np.array_equal(a.b1, b.b1, equal_nan=True)
    assert np.array_equal(a.b2, b.b2, equal_nan=True)
    assert a.t_star == b.t_star


def test_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(n_steps=8)
    with pytest.raises(ConfigError):
        SolverConfig(quad_order=1)
    with pytest.raises(ConfigError):
        SolverConfig(root_tol=-1e-8)
    with pytest.raises(ConfigError):
        SolverConfig(merge_gap=0.0)


# ---------------------------------------------------------- refinement


def test_coarse_and_fine_t_star_agree(spec_mu1, table_mu1):
    coarse = solve_boundaries(spec_mu1, SolverConfig(n_steps=16))
    fine = solve_boundaries(spec_mu1, SolverConfig(n_steps=512))
    assert abs(coarse.t_star - fine.t_star) <= 0.05
    assert abs(table_mu1.t_star - fine.t_star) <= 0.02


def test_refine_convergence_zero_drift(spec_mu0):
    report = refine_convergence(spec_mu0, SolverConfig(n_steps=16), factors=(1, 2, 4))
    assert report.factors == (1, 2, 4)
    assert len(report.tables) == 3
    assert len(report.b1_diffs) == 2
    assert report.decreasing
    assert report.t_stars == (0.0, 0.0, 0.0)


def test_refine_convergence_production_rate(spec_mu0):
    # Full-resolution study: doubling 100 -> 200 -> 400 must shrink the
    # common-grid boundary drift by at least 1.5x per doubling.
    report = refine_convergence(spec_mu0, SolverConfig(n_steps=100), factors=(1, 2, 4))
    assert report.decreasing
    assert report.b1_diffs[0] >= 1.5 * report.b1_diffs[1]


def test_refine_convergence_validation(spec_mu0):
    cfg = SolverConfig(n_steps=16)
    with pytest.raises(ConfigError):
        refine_convergence(spec_mu0, cfg, factors=())
    with pytest.raises(ConfigError):
        refine_convergence(spec_mu0, cfg, factors=(2, 1))
    with pytest.raises(ConfigError):
        refine_convergence(spec_mu0, cfg, factors=(1, 3, 5))
