"""NumPy reference backend for the state-expectation quadrature.

Computes, for the maximum-gap state started at x,

    E_x[ g(X_u) ; y < X_u < z ],      X_u = max(x, S^mu_u) - B^mu_u,

by integrating against the joint law of (B^mu_u, S^mu_u) in the reflected
coordinates (s, m) with m = 2s - b.  In these coordinates the density is

    sqrt(2/pi) u^(-3/2) m exp(-m^2/(2u) + mu (2s - m) - mu^2 u / 2)

on {m >= s >= 0}, the state is X = A(s) + m with A(s) = x - 2s for s <= x
and A(s) = -s for s > x, and the band restriction becomes m-limits per s.

The payload g is w -> w^2 (mode 0) or w -> H(tau_eval, w) (modes 1 and 2,
band-restricted; mode 2 has z = +inf).  Outer (s) and inner (m) axes use
tensorized Gauss-Legendre panels; panel layout splits at the integrand
kinks s in {x - z, x - y, x} and, when the evaluation time is close to
the horizon (sqrt(tau_eval) << sqrt(u)), refines the m-panels near the
band edges where H varies on the shorter scale sqrt(tau_eval).
"""
from __future__ import annotations

import numpy as np

from ..gain import h_raw

__all__ = ["xmax_quad"]


def _panel_edges(lo: float, hi: float, max_len: float) -> np.ndarray:
    n = max(1, int(np.ceil((hi - lo) / max_len)))
    return np.linspace(lo, hi, n + 1)


def _m_edges(mlo, mhi, u, tau_eval, refine, mode):
    base = 6.0 * np.sqrt(u) / refine
    width = mhi - mlo
    if mode == 0 or tau_eval <= 0.0:
        return _panel_edges(mlo, mhi, base)
    scale = np.sqrt(tau_eval)
    if scale >= np.sqrt(u):
        return _panel_edges(mlo, mhi, base)
    edge = 6.0 * scale / refine
    fine = 1.5 * scale / refine
    n_edges = 2 if mode == 1 else 1
    if width <= (n_edges + 0.5) * edge:
        return _panel_edges(mlo, mhi, fine)
    pieces = [_panel_edges(mlo, mlo + edge, fine)]
    if mode == 1:
        pieces.append(_panel_edges(mlo + edge, mhi - edge, base)[1:])
        pieces.append(_panel_edges(mhi - edge, mhi, fine)[1:])
    else:
        pieces.append(_panel_edges(mlo + edge, mhi, base)[1:])
    return np.concatenate(pieces)


def xmax_quad(mu, u, x, y, z, tau_eval, mode, refine, glx, glw):
    """Tensor Gauss-Legendre evaluation of E_x[g(X_u); y < X_u < z].

    ``glx``/``glw`` are Gauss-Legendre nodes and weights on [-1, 1]; the
    same arrays drive both the outer and inner axes.  ``refine`` >= 1
    shrinks every panel proportionally (used for convergence checks and
    near-horizon retries).
    """
    ru = np.sqrt(u)
    m_max = abs(mu) * u + 12.0 * ru
    s_max = m_max
    kinks = sorted(c for c in {x - z, x - y, x} if np.isfinite(c) and 0.0 < c < s_max)
    breaks = [0.0] + kinks + [s_max]
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        edges = _panel_edges(a, b, 6.0 * ru / refine)
        for pa, pb in zip(edges[:-1], edges[1:]):
            half = 0.5 * (pb - pa)
            s_nodes = 0.5 * (pa + pb) + half * glx
            s_w = half * glw
            A = np.where(s_nodes <= x, x - 2.0 * s_nodes, -s_nodes)
            mlo = np.maximum(s_nodes, y - A)
            mhi = np.minimum(m_max, z - A)
            inner = np.zeros_like(s_nodes)
            for i in range(len(s_nodes)):
                if mhi[i] <= mlo[i]:
                    continue
                me = _m_edges(mlo[i], mhi[i], u, tau_eval, refine, mode)
                hw = 0.5 * np.diff(me)
                mid = 0.5 * (me[:-1] + me[1:])
                mn = (mid[:, None] + hw[:, None] * glx[None, :]).ravel()
                mw = (hw[:, None] * glw[None, :]).ravel()
                state = A[i] + mn
                if mode == 0:
                    gv = state * state
                else:
                    gv = h_raw(mu, tau_eval, state)
                weight = mn * np.exp(-mn * mn / (2.0 * u) + mu * (2.0 * s_nodes[i] - mn))
                inner[i] = np.sum(mw * gv * weight)
            total += np.sum(s_w * inner)
    return float(np.sqrt(2.0 / np.pi) * u**-1.5 * np.exp(-0.5 * mu * mu * u) * total)
