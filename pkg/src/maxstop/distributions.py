"""Normal special functions and the laws of the drifted running maximum.

For a Brownian motion with drift, B^mu_t = B_t + mu*t, and its running
maximum S^mu_t = max_{s<=t} B^mu_s, this module provides

* the standard-normal cdf/pdf,
* ``max_cdf``: the distribution function P(S^mu_tau <= z),
* ``joint_density``: the joint density f(tau, b, s) of (B^mu_tau, S^mu_tau).

The exponentially tilted term exp(2*mu*z) * Phi(...) that appears in both
closed forms is evaluated in log space: the two factors overflow/underflow
individually long before their product leaves the representable range.
"""
from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import ConfigError
from .problem import ProblemSpec

SQRT_2PI = np.sqrt(2.0 * np.pi)
SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def std_normal_cdf(u):
    """Standard normal cdf Phi(u), exact to better than 1e-12 absolute."""
    return ndtr(u)


def std_normal_pdf(u):
    """Standard normal density phi(u) = exp(-u^2/2)/sqrt(2*pi)."""
    u = np.asarray(u, dtype=float)
    out = np.exp(-0.5 * u * u) / SQRT_2PI
    return out if out.ndim else float(out)


def tilted_cdf(a, b):
    """exp(a) * Phi(b), evaluated as exp(a + log Phi(b)) to avoid overflow."""
    a = np.asarray(a, dtype=float)
    out = np.exp(a + log_ndtr(b))
    return out if out.ndim else float(out)


def _check_duration(spec: ProblemSpec, tau: float) -> float:
    tau = float(tau)
    if not 0.0 <= tau <= spec.T:
        raise ConfigError(f"duration {tau!r} outside [0, {spec.T}]")
    return tau


def max_cdf(spec: ProblemSpec, tau, z):
    """P(S^mu_tau <= z): distribution function of the running maximum.

    Parameters
    ----------
    spec : ProblemSpec
        Problem instance; only the drift enters.
    tau : float
        Elapsed duration, in [0, T].  ``tau = 0`` gives the unit step at 0.
    z : float or ndarray
        Level(s) at which to evaluate.

    Returns
    -------
    float or ndarray
        Phi((z - mu*tau)/sqrt(tau)) - exp(2*mu*z) * Phi((-z - mu*tau)/sqrt(tau))
        for z >= 0, clipped to the step function for z < 0 or tau = 0.
    """
    tau = _check_duration(spec, tau)
    z = np.asarray(z, dtype=float)
    if tau == 0.0:
        out = np.where(z >= 0.0, 1.0, 0.0)
        return out if out.ndim else float(out)
    rt = np.sqrt(tau)
    zp = np.maximum(z, 0.0)
    body = ndtr((zp - spec.mu * tau) / rt) - tilted_cdf(
        2.0 * spec.mu * zp, (-zp - spec.mu * tau) / rt
    )
    out = np.where(z < 0.0, 0.0, body)
    return out if out.ndim else float(out)


def joint_density(spec: ProblemSpec, tau, b, s):
    """Joint density f(tau, b, s) of (B^mu_tau, S^mu_tau) at (b, s).

    Supported on {s >= max(0, b)}; zero elsewhere.  The closed form is

        f = sqrt(2/pi) * (2s - b) / tau^(3/2)
            * exp(-(2s - b)^2 / (2 tau) + mu*b - mu^2 tau / 2).

    Parameters
    ----------
    spec : ProblemSpec
        Problem instance; only the drift enters.
    tau : float
        Elapsed duration, in (0, T].
    b, s : float or ndarray
        Endpoint and running-maximum coordinates (broadcast together).
    """
    tau = _check_duration(spec, tau)
    if tau == 0.0:
        raise ConfigError("joint density is degenerate at duration 0")
    b = np.asarray(b, dtype=float)
    s = np.asarray(s, dtype=float)
    m = 2.0 * s - b
    body = (
        SQRT_2_OVER_PI
        * m
        * tau**-1.5
        * np.exp(-m * m / (2.0 * tau) + spec.mu * b - 0.5 * spec.mu**2 * tau)
    )
    out = np.where((s >= 0.0) & (s >= b), body, 0.0)
    return out if out.ndim else float(out)
