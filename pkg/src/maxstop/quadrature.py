"""Dispatch layer for the state-expectation quadrature.

``xmax_expectation`` evaluates E_x[g(X_u); y < X_u < z] for the
maximum-gap state X_u = max(x, S^mu_u) - B^mu_u, where the payload g is
selected by mode:

* ``MODE_J``: g(w) = w^2 over the whole state axis (band ignored),
* ``MODE_K``: g(w) = H(tau_eval, w) restricted to a finite band (y, z),
* ``MODE_L``: g(w) = H(tau_eval, w) restricted to (y, +inf).

The heavy lifting happens in a backend selected at import time (compiled
core when built, NumPy reference otherwise); this module owns argument
validation and the Gauss-Legendre node cache.
"""
from __future__ import annotations

import numpy as np

from . import backends
from .gain import gl_nodes, h_raw

__all__ = ["MODE_J", "MODE_K", "MODE_L", "xmax_expectation", "backend_name"]

MODE_J, MODE_K, MODE_L = 0, 1, 2


def backend_name() -> str:
    """Name of the quadrature backend in use: 'compiled' or 'reference'."""
    return backends.BACKEND


def xmax_expectation(
    mu: float,
    u: float,
    x: float,
    y: float,
    z: float,
    tau_eval: float,
    mode: int,
    order: int = 32,
    refine: int = 1,
) -> float:
    """E_x[g(X_u); y < X_u < z] with the mode-selected payload g.

    Parameters
    ----------
    mu : float
        Drift of the underlying Brownian motion.
    u : float
        Lookahead duration (>= 0); u = 0 reduces to a pointwise evaluation.
    x : float
        Starting state (>= 0).
    y, z : float
        Band limits, 0 <= y and y <= z <= +inf; a pinched band (y >= z)
        is empty and yields 0 in ``MODE_K``.  Ignored for ``MODE_J``.
    tau_eval : float
        Time remaining at the evaluation instant, the scale on which the
        payload H varies (unused for ``MODE_J``).
    mode : int
        One of ``MODE_J``, ``MODE_K``, ``MODE_L``.
    order : int
        Gauss-Legendre order per panel axis.
    refine : int
        Uniform panel-shrink factor, 1..16.
    """
    if u < 0.0:
        raise ValueError(f"lookahead must be nonnegative, got {u!r}")
    if x < 0.0:
        raise ValueError(f"state must be nonnegative, got {x!r}")
    if mode not in (MODE_J, MODE_K, MODE_L):
        raise ValueError(f"unknown quadrature mode {mode!r}")
    if mode == MODE_J:
        y, z = 0.0, np.inf
    elif y < 0.0:
        raise ValueError(f"band must satisfy 0 <= y, got ({y!r}, {z!r})")
    elif mode == MODE_K and y >= z:
        # Interpolated edges may touch or cross on a stretch where the band
        # pinches shut; an empty band contributes nothing.
        return 0.0
    elif not y < z:
        raise ValueError(f"band must satisfy y < z, got ({y!r}, {z!r})")
    if not 2 <= order <= 64:
        raise ValueError(f"quadrature order must be in [2, 64], got {order!r}")
    if not 1 <= refine <= 16:
        raise ValueError(f"refine factor must be in [1, 16], got {refine!r}")

    if u == 0.0:
        if mode == MODE_J:
            return x * x
        return float(h_raw(mu, tau_eval, x)) if y < x < z else 0.0

    glx, glw = gl_nodes(order)
    return backends.xmax_quad(
        float(mu), float(u), float(x), float(y), float(z), float(tau_eval),
        int(mode), int(refine), glx, glw,
    )
