# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the state-expectation quadrature.

C translation of the NumPy reference backend (see ``_ref.py`` for the
derivation and panel-layout rules): tensor Gauss-Legendre evaluation of
E_x[g(X_u); y < X_u < z] in the reflected coordinates (s, m), with the
normal cdf and its logarithm implemented on top of libc's erfc and an
asymptotic tail expansion for arguments below -36.
"""
from libc.math cimport INFINITY, ceil, erfc, exp, fabs, log, log1p, sqrt

cdef double SQRT2 = sqrt(2.0)
cdef double SQRT_2PI = 2.5066282746310005024
cdef double SQRT_2_OVER_PI = 0.7978845608028653559

cdef enum:
    MAX_EDGES = 512


cdef inline double _ndtr(double a) noexcept nogil:
    return 0.5 * erfc(-a / SQRT2)


cdef inline double _npdf(double a) noexcept nogil:
    return exp(-0.5 * a * a) / SQRT_2PI


cdef inline double _log_ndtr(double a) noexcept nogil:
    cdef double i2
    if a > -36.0:
        return log(0.5 * erfc(-a / SQRT2))
    # Mills-ratio asymptotic series of the normal tail; the truncation
    # error is below machine epsilon for a <= -36.
    i2 = 1.0 / (a * a)
    return (-0.5 * a * a - log(-a * SQRT_2PI)
            + log1p(i2 * (-1.0 + i2 * (3.0 + i2 * (-15.0 + 105.0 * i2)))))


cdef inline double _h_eval(double mu, double tau, double w) noexcept nogil:
    cdef double rt, a
    if tau <= 0.0:
        return 1.0 - 2.0 * mu * w if w > 0.0 else -1.0
    rt = sqrt(tau)
    a = (w - mu * tau) / rt
    return ((2.0 * mu * mu * tau - 2.0 * mu * w + 3.0) * _ndtr(a)
            - 2.0 * mu * rt * _npdf(a)
            - exp(2.0 * mu * w + _log_ndtr((-w - mu * tau) / rt))
            - 2.0 * (1.0 + mu * mu * tau))


cdef inline int _fill_edges(double* buf, int start, double lo, double hi,
                            double max_len) noexcept nogil:
    """Append a uniform subdivision of [lo, hi] to buf[start:]; return new count."""
    cdef int n = <int>ceil((hi - lo) / max_len)
    if n < 1:
        n = 1
    if start + n + 1 > MAX_EDGES:
        n = MAX_EDGES - start - 1
    cdef int i
    cdef double step = (hi - lo) / n
    for i in range(n + 1):
        buf[start + i] = lo + step * i
    buf[start + n] = hi
    return start + n + 1


cdef int _m_edges(double* buf, double mlo, double mhi, double u,
                  double tau_eval, int refine, int mode) noexcept nogil:
    cdef double base = 6.0 * sqrt(u) / refine
    cdef double width = mhi - mlo
    cdef double scale, edge, fine
    cdef int n_edges, cnt
    if mode == 0 or tau_eval <= 0.0:
        return _fill_edges(buf, 0, mlo, mhi, base)
    scale = sqrt(tau_eval)
    if scale >= sqrt(u):
        return _fill_edges(buf, 0, mlo, mhi, base)
    edge = 6.0 * scale / refine
    fine = 1.5 * scale / refine
    n_edges = 2 if mode == 1 else 1
    if width <= (n_edges + 0.5) * edge:
        return _fill_edges(buf, 0, mlo, mhi, fine)
    cnt = _fill_edges(buf, 0, mlo, mlo + edge, fine)
    if mode == 1:
        cnt = _fill_edges(buf, cnt - 1, mlo + edge, mhi - edge, base)
        cnt = _fill_edges(buf, cnt - 1, mhi - edge, mhi, fine)
    else:
        cnt = _fill_edges(buf, cnt - 1, mlo + edge, mhi, base)
    return cnt


def xmax_quad(double mu, double u, double x, double y, double z,
              double tau_eval, int mode, int refine,
              double[::1] glx, double[::1] glw):
    """Compiled twin of the reference backend's ``xmax_quad``."""
    cdef int order = glx.shape[0]
    cdef double ru = sqrt(u)
    cdef double m_max = fabs(mu) * u + 12.0 * ru
    cdef double s_max = m_max
    cdef double s_len = 6.0 * ru / refine

    # Kinks of the integrand along the s axis, ascending and deduplicated.
    cdef double breaks[5]
    cdef double cand[3]
    cdef int n_breaks = 1, n_cand = 0, i, j
    cdef double c, tmp
    breaks[0] = 0.0
    cand[0] = x - z
    cand[1] = x - y
    cand[2] = x
    for i in range(3):
        c = cand[i]
        if c == c and c > 0.0 and c < s_max and c != INFINITY and c != -INFINITY:
            cand[n_cand] = c
            n_cand += 1
    for i in range(1, n_cand):
        for j in range(i, 0, -1):
            if cand[j] < cand[j - 1]:
                tmp = cand[j]; cand[j] = cand[j - 1]; cand[j - 1] = tmp
    for i in range(n_cand):
        if cand[i] != breaks[n_breaks - 1]:
            breaks[n_breaks] = cand[i]
            n_breaks += 1
    breaks[n_breaks] = s_max
    n_breaks += 1

    cdef double s_edges[MAX_EDGES]
    cdef double m_edges[MAX_EDGES]
    cdef int n_se, n_me, k, p, q, si, mi
    cdef double pa, pb, half_s, s_node, s_weight, A, mlo, mhi
    cdef double ma, mb, half_m, m_node, m_weight, state, gval, wgt
    cdef double inner, total = 0.0

    with nogil:
        for k in range(n_breaks - 1):
            n_se = _fill_edges(s_edges, 0, breaks[k], breaks[k + 1], s_len)
            for p in range(n_se - 1):
                pa = s_edges[p]; pb = s_edges[p + 1]
                half_s = 0.5 * (pb - pa)
                for si in range(order):
                    s_node = 0.5 * (pa + pb) + half_s * glx[si]
                    s_weight = half_s * glw[si]
                    A = x - 2.0 * s_node if s_node <= x else -s_node
                    mlo = s_node if y - A < s_node else y - A
                    mhi = m_max if z - A > m_max else z - A
                    if mhi <= mlo:
                        continue
                    n_me = _m_edges(m_edges, mlo, mhi, u, tau_eval, refine, mode)
                    inner = 0.0
                    for q in range(n_me - 1):
                        ma = m_edges[q]; mb = m_edges[q + 1]
                        half_m = 0.5 * (mb - ma)
                        for mi in range(order):
                            m_node = 0.5 * (ma + mb) + half_m * glx[mi]
                            m_weight = half_m * glw[mi]
                            state = A + m_node
                            if mode == 0:
                                gval = state * state
                            else:
                                gval = _h_eval(mu, tau_eval, state)
                            wgt = m_node * exp(-m_node * m_node / (2.0 * u)
                                               + mu * (2.0 * s_node - m_node))
                            inner += m_weight * gval * wgt
                    total += s_weight * inner
    return SQRT_2_OVER_PI * u ** -1.5 * exp(-0.5 * mu * mu * u) * total
