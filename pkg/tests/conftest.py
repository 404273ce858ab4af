"""Shared fixtures: small solved tables and lattices reused across tests.

Unit tests run on deliberately coarse grids so the whole suite stays
fast; the acceptance tests solve at full resolution in their own module.
"""
from __future__ import annotations

import numpy as np
import pytest

from maxstop.dp import solve_dp
from maxstop.problem import ProblemSpec
from maxstop.solver import SolverConfig, solve_boundaries


@pytest.fixture(scope="session")
def spec_mu0() -> ProblemSpec:
    return ProblemSpec(mu=0.0)


@pytest.fixture(scope="session")
def spec_mu1() -> ProblemSpec:
    return ProblemSpec(mu=1.0)


@pytest.fixture(scope="session")
def spec_mun05() -> ProblemSpec:
    return ProblemSpec(mu=-0.5)


@pytest.fixture(scope="session")
def table_mu0(spec_mu0):
    return solve_boundaries(spec_mu0, SolverConfig(n_steps=16))


@pytest.fixture(scope="session")
def table_mu1(spec_mu1):
    return solve_boundaries(spec_mu1, SolverConfig(n_steps=64))


@pytest.fixture(scope="session")
def table_mun05(spec_mun05):
    return solve_boundaries(spec_mun05, SolverConfig(n_steps=16))


@pytest.fixture(scope="session")
def dp_mu0(spec_mu0):
    return solve_dp(spec_mu0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260815)
