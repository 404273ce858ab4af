"""Gain function G and the source function H of the stopping problem.

With tau = T - t the time remaining and F the cdf of the drifted running
maximum (``distributions.max_cdf``), the module provides closed forms for

* ``gain``              G(t,x)   = x^2 + 2 * integral_x^inf z (1 - F(tau,z)) dz,
* ``gain_t``            dG/dt,
* ``gain_x``            dG/dx    = 2 x F(tau, x),
* ``h_function``        H(t,x)   = G_t(t,x) - mu G_x(t,x) + G_xx(t,x)/2,
* ``h_time_derivative`` dH/dt,

plus their raw (drift, duration)-parameterized twins used by the quadrature
backends.  G is the expected squared error of stopping immediately at state
x; H is the running cost rate that the free-boundary equations integrate.

Every derivative is coded from its closed form and cross-checked against
finite differences in the test suite; nothing here differentiates
numerically.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .distributions import SQRT_2PI, tilted_cdf
from .problem import ProblemSpec

__all__ = [
    "gain",
    "gain_t",
    "gain_x",
    "h_function",
    "h_time_derivative",
    "gain_raw",
    "gain_t_raw",
    "gain_x_raw",
    "h_raw",
    "h_t_raw",
]

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], cached per order."""
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    return _GL_CACHE[order]


def _npdf(u):
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u) / SQRT_2PI


def adaptive_gauss_legendre(f, a: float, b: float, tol: float = 1e-9) -> float:
    """Integrate a smooth vectorized ``f`` over [a, b] by panel subdivision.

    Each panel is accepted when its Gauss-Legendre 16- and 32-point values
    agree to ``tol`` scaled by the panel fraction of the interval; otherwise
    it is bisected.  Smooth, rapidly decaying integrands converge in a
    handful of panels.
    """
    x16, w16 = gl_nodes(16)
    x32, w32 = gl_nodes(32)

    def panel(lo, hi):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        coarse = half * np.sum(w16 * f(mid + half * x16))
        fine = half * np.sum(w32 * f(mid + half * x32))
        return coarse, fine

    total = 0.0
    stack = [(a, b)]
    splits = 0
    while stack:
        lo, hi = stack.pop()
        coarse, fine = panel(lo, hi)
        if abs(fine - coarse) <= tol * max(1.0, (hi - lo) / (b - a)) or splits >= 60:
            total += fine
        else:
            mid = 0.5 * (lo + hi)
            stack.extend([(lo, mid), (mid, hi)])
            splits += 1
    return total


# ----------------------------------------------------------------- raw forms


def max_tail_raw(mu: float, tau: float, z):
    """P(S^mu_tau > z) for z >= 0: the tail weight driving the gain integral."""
    rt = np.sqrt(tau)
    z = np.asarray(z, dtype=float)
    return 1.0 - ndtr((z - mu * tau) / rt) + tilted_cdf(2.0 * mu * z, (-z - mu * tau) / rt)


def gain_raw(mu: float, T: float, t: float, x: float) -> float:
    """G(t, x) by tail quadrature; exact x^2 at t = T."""
    tau = T - t
    if tau == 0.0:
        return x * x
    z_max = max(x, max(mu, 0.0) * tau + 10.0 * np.sqrt(tau)) + 10.0
    tail = adaptive_gauss_legendre(
        lambda z: z * max_tail_raw(mu, tau, z), x, z_max, tol=1e-9
    )
    return x * x + 2.0 * tail


def gain_t_raw(mu: float, tau: float, x):
    """dG/dt at time remaining tau, by closed form (limit values at tau = 0)."""
    x = np.asarray(x, dtype=float)
    if tau == 0.0:
        out = np.where(x > 0.0, 0.0, -1.0)
        return out if out.ndim else float(out)
    rt = np.sqrt(tau)
    a = (x - mu * tau) / rt
    out = -2.0 * (1.0 + mu * mu * tau) * ndtr(-a) - 2.0 * ((x + mu * tau) / rt) * _npdf(a)
    return out if out.ndim else float(out)


def gain_x_raw(mu: float, tau: float, x):
    """dG/dx = 2 x F(tau, x) with F the running-maximum cdf."""
    x = np.asarray(x, dtype=float)
    if tau == 0.0:
        out = 2.0 * x
        return out if out.ndim else float(out)
    rt = np.sqrt(tau)
    cdf = ndtr((x - mu * tau) / rt) - tilted_cdf(2.0 * mu * x, (-x - mu * tau) / rt)
    out = 2.0 * x * cdf
    return out if out.ndim else float(out)


def h_raw(mu: float, tau: float, w):
    """H at time remaining tau, vectorized over the state w >= 0.

    At tau = 0 the closed form is 0/0; the analytically forced limit is
    1 - 2 mu w for w > 0 and -1 at w = 0.
    """
    w = np.asarray(w, dtype=float)
    if tau <= 0.0:
        out = np.where(w > 0.0, 1.0 - 2.0 * mu * w, -1.0)
        return out if out.ndim else float(out)
    rt = np.sqrt(tau)
    a = (w - mu * tau) / rt
    out = (
        (2.0 * mu * mu * tau - 2.0 * mu * w + 3.0) * ndtr(a)
        - 2.0 * mu * rt * _npdf(a)
        - tilted_cdf(2.0 * mu * w, (-w - mu * tau) / rt)
        - 2.0 * (1.0 + mu * mu * tau)
    )
    return out if out.ndim else float(out)


def h_t_raw(mu: float, tau: float, x):
    """dH/dt at time remaining tau > 0, by closed form."""
    x = np.asarray(x, dtype=float)
    rt = np.sqrt(tau)
    a = (x - mu * tau) / rt
    out = 2.0 * mu * mu * ndtr(-a) + 2.0 * (x + mu * tau) * tau**-1.5 * _npdf(a)
    return out if out.ndim else float(out)


# ------------------------------------------------------------ validated API


def _check_point(spec: ProblemSpec, t: float, x) -> float:
    t = spec.check_time(t)
    if np.any(np.asarray(x) < 0.0):
        raise ValueError(f"state must be nonnegative, got {x!r}")
    return t


def gain(spec: ProblemSpec, t: float, x: float) -> float:
    """Expected squared error G(t, x) of stopping now at state x.

    Satisfies G(t,x) >= x^2 with equality at t = T, and is nondecreasing
    in x for fixed t.
    """
    t = _check_point(spec, t, x)
    return gain_raw(spec.mu, spec.T, t, float(x))


def gain_t(spec: ProblemSpec, t: float, x):
    """Time derivative of the gain, dG/dt, by closed form."""
    t = _check_point(spec, t, x)
    return gain_t_raw(spec.mu, spec.T - t, x)


def gain_x(spec: ProblemSpec, t: float, x):
    """Space derivative of the gain, dG/dx = 2 x F(T - t, x); zero at x = 0."""
    t = _check_point(spec, t, x)
    return gain_x_raw(spec.mu, spec.T - t, x)


def h_function(spec: ProblemSpec, t: float, x):
    """Source rate H(t, x) = G_t - mu G_x + G_xx / 2 (limit values at t = T)."""
    t = _check_point(spec, t, x)
    return h_raw(spec.mu, spec.T - t, x)


def h_time_derivative(spec: ProblemSpec, t: float, x):
    """Time derivative dH/dt for t < T; nonnegative when mu >= 0."""
    t = _check_point(spec, t, x)
    if t == spec.T:
        raise ValueError("dH/dt is undefined at the horizon")
    return h_t_raw(spec.mu, spec.T - t, x)
