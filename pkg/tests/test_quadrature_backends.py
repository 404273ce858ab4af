"""Quadrature engine: compiled and reference backends must agree.

The engine evaluates banded expectations of the source function against
the one-step transition law; both implementations share the same panel
layout, so agreement is to rounding, not to quadrature tolerance.
"""
from __future__ import annotations

import itertools
import math

import pytest

from maxstop.backends import available_backends, get_backend
from maxstop.gain import gl_nodes
from maxstop.quadrature import MODE_J, MODE_K, MODE_L, backend_name, xmax_expectation


def _raw(backend, mu, u, x, y, z, tau, mode, order=32, refine=1):
    glx, glw = gl_nodes(order)
    return backend.xmax_quad(
        float(mu), float(u), float(x), float(y), float(z), float(tau),
        int(mode), int(refine), glx, glw,
    )


def test_backend_name_is_known():
    assert backend_name() in ("compiled", "reference")


def test_compiled_backend_present():
    # The build in this repository compiles the extension; if that ever
    # regresses we want a loud failure here, not a silent slow fallback.
    assert "reference" in available_backends()
    assert "compiled" in available_backends()


def test_get_backend_rejects_unknown():
    with pytest.raises(ValueError):
        get_backend("fortran")


PROBES = [
    # (mu, u, x, y, z, tau_eval, mode)
    (0.0, 0.3, 0.5, 0.2, 0.9, 0.2, MODE_K),
    (1.0, 0.2, 0.2, 0.1, 0.5, 0.2, MODE_K),
    (-0.5, 0.25, 0.4, 0.0, math.inf, 0.25, MODE_L),
    (0.5, 1.0, 1.0, 0.0, math.inf, 0.0, MODE_J),
    (2.0, 0.05, 0.3, 0.25, 0.31, 0.1, MODE_K),
    (0.0, 0.9, 0.0, 0.7, math.inf, 0.05, MODE_L),
]


@pytest.mark.parametrize("mu,u,x,y,z,tau,mode", PROBES)
def test_backends_agree_to_rounding(mu, u, x, y, z, tau, mode):
    if len(available_backends()) < 2:
        pytest.skip("only one backend built")
    a = _raw(get_backend("reference"), mu, u, x, y, z, tau, mode)
    b = _raw(get_backend("compiled"), mu, u, x, y, z, tau, mode)
    assert abs(a - b) <= 5e-15 * max(1.0, abs(a))


def test_backends_agree_on_dense_grid():
    if len(available_backends()) < 2:
        pytest.skip("only one backend built")
    ref = get_backend("reference")
    com = get_backend("compiled")
    worst = 0.0
    for mu, u, x in itertools.product((-0.5, 0.0, 1.0), (0.05, 0.3), (0.0, 0.4, 1.1)):
        for y, z in ((0.0, 0.8), (0.3, math.inf)):
            mode = MODE_K if math.isfinite(z) else MODE_L
            a = _raw(ref, mu, u, x, y, z, 0.1, mode, order=24)
            b = _raw(com, mu, u, x, y, z, 0.1, mode, order=24)
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    assert worst <= 5e-15


def test_empty_band_contributes_nothing():
    z = 0.7
    val = xmax_expectation(0.5, 0.2, 0.4, z - 1e-15, z, 0.3, MODE_K)
    assert abs(val) <= 1e-12
    assert xmax_expectation(0.5, 0.2, 0.4, z, z, 0.3, MODE_K) == 0.0


def test_mode_j_ignores_band_and_needs_no_tau():
    v1 = xmax_expectation(0.5, 1.0, 1.0, 0.0, math.inf, 0.0, MODE_J)
    v2 = xmax_expectation(0.5, 1.0, 1.0, 123.0, 456.0, 0.0, MODE_J)
    assert v1 == v2
    assert v1 > 1.0


def test_zero_lookahead_is_pointwise():
    assert xmax_expectation(0.3, 0.0, 1.2, 0.0, math.inf, 0.4, MODE_J) == pytest.approx(1.44)
    assert xmax_expectation(0.3, 0.0, 1.2, 2.0, 3.0, 0.4, MODE_K) == 0.0


def test_validation_rejections():
    with pytest.raises(ValueError):
        xmax_expectation(0.0, 0.2, 0.1, -0.1, 0.5, 0.3, MODE_K)
    with pytest.raises(ValueError):
        xmax_expectation(0.0, -0.1, 0.1, 0.0, 0.5, 0.3, MODE_K)
    with pytest.raises(ValueError):
        xmax_expectation(0.0, 0.2, -0.1, 0.0, 0.5, 0.3, MODE_K)
    with pytest.raises(ValueError):
        xmax_expectation(0.0, 0.2, 0.1, 0.0, 0.5, 0.3, 7)
    with pytest.raises(ValueError):
        xmax_expectation(0.0, 0.2, 0.1, 0.5, 0.4, 0.3, MODE_L)
    with pytest.raises(ValueError):
        xmax_expectation(0.0, 0.2, 0.1, 0.0, 0.5, 0.3, MODE_K, order=1)
    with pytest.raises(ValueError):
        xmax_expectation(0.0, 0.2, 0.1, 0.0, 0.5, 0.3, MODE_K, refine=0)


def test_refinement_converges():
    # Shrinking panels must move the answer by far less than its size.
    args = (0.3, 0.4, 0.6, 0.1, 1.2, 0.2, MODE_K)
    v1 = xmax_expectation(*args, order=16, refine=1)
    v2 = xmax_expectation(*args, order=16, refine=2)
    v3 = xmax_expectation(*args, order=16, refine=4)
    assert abs(v2 - v3) <= max(abs(v1 - v2), 1e-14)
    assert abs(v1 - v3) < 1e-8


def test_order_convergence():
    args = (1.0, 0.2, 0.2, 0.1, 0.5, 0.2, MODE_K)
    lo = xmax_expectation(*args, order=8)
    hi = xmax_expectation(*args, order=48)
    assert abs(lo - hi) < 5e-6
    vhi = xmax_expectation(*args, order=64)
    assert abs(hi - vhi) < 1e-11
