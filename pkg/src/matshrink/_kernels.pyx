# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused C implementation of the importance-sampling hot kernel.

Same contract as matshrink._kernels_py.is_posterior_mean: consumes a
pre-drawn (K, n, p) block of standard normals so the random stream is
identical to the pure-python backend's.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, exp, isnan, log, log1p, sqrt

from .errors import NonFiniteEvaluation

cnp.import_array()

cdef extern from "math.h" nogil:
    double M_PI

DEF FLAT = 0
DEF DET_TYPE = 1
DEF STEIN = 2
DEF COLUMNWISE = 3


cdef inline double _chol_logdet(double[:, ::1] S, Py_ssize_t p) noexcept nogil:
    # in-place lower Cholesky; NAN signals a numerically non-PD matrix
    cdef Py_ssize_t i, j, k
    cdef double acc, d
    cdef double ld = 0.0
    for j in range(p):
        acc = S[j, j]
        for k in range(j):
            acc -= S[j, k] * S[j, k]
        if acc <= 0.0:
            return NAN
        d = sqrt(acc)
        S[j, j] = d
        ld += log(d)
        for i in range(j + 1, p):
            acc = S[i, j]
            for k in range(j):
                acc -= S[i, k] * S[j, k]
            S[i, j] = acc / d
    return 2.0 * ld


cdef double _logpi(double[:, ::1] M, double[:, ::1] S, Py_ssize_t n, Py_ssize_t p,
                   int family, double a, double b) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double acc, det, t, lw
    if family == FLAT:
        return 0.0
    if family == STEIN:
        t = b
        for i in range(n):
            for j in range(p):
                t += M[i, j] * M[i, j]
        if t <= 0.0:
            return INFINITY
        return -0.5 * a * log(t)
    if family == COLUMNWISE:
        lw = 0.0
        for j in range(p):
            t = b
            for i in range(n):
                t += M[i, j] * M[i, j]
            if t <= 0.0:
                return INFINITY
            lw -= 0.5 * a * log(t)
        return lw
    # DET_TYPE: S = M'M + b I, log pi = -a * logdet(S)
    for i in range(p):
        for j in range(i, p):
            acc = 0.0
            for k in range(n):
                acc += M[k, i] * M[k, j]
            S[i, j] = acc
            S[j, i] = acc
        S[i, i] += b
    if p == 1:
        det = S[0, 0]
    elif p == 2:
        det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    elif p == 3:
        det = (S[0, 0] * (S[1, 1] * S[2, 2] - S[1, 2] * S[2, 1])
               - S[0, 1] * (S[1, 0] * S[2, 2] - S[1, 2] * S[2, 0])
               + S[0, 2] * (S[1, 0] * S[2, 1] - S[1, 1] * S[2, 0]))
    else:
        t = _chol_logdet(S, p)
        if isnan(t):
            return INFINITY
        return -a * t
    if det <= 0.0:
        return INFINITY
    return -a * log(det)


def is_posterior_mean(double[:, ::1] X, double[:, :, ::1] Z, int family, double a, double b):
    """Self-normalized IS posterior mean with antithetic pairs X +- Z_k."""
    cdef Py_ssize_t K = Z.shape[0]
    cdef Py_ssize_t n = Z.shape[1]
    cdef Py_ssize_t p = Z.shape[2]
    if X.shape[0] != n or X.shape[1] != p:
        raise ValueError("X and Z shapes are inconsistent")
    if family < FLAT or family > COLUMNWISE:
        raise ValueError(f"unknown family code {family}")

    logw_arr = np.empty(2 * K)
    Mbuf_arr = np.empty((n, p))
    Sbuf_arr = np.empty((p, p))
    num_arr = np.zeros((n, p))
    cdef double[::1] logw = logw_arr
    cdef double[:, ::1] Mbuf = Mbuf_arr
    cdef double[:, ::1] Sbuf = Sbuf_arr
    cdef double[:, ::1] num = num_arr

    cdef Py_ssize_t k, i, j
    cdef double m = -INFINITY
    cdef double wp, wm, wsum, wsq, z

    with nogil:
        for k in range(K):
            for i in range(n):
                for j in range(p):
                    Mbuf[i, j] = X[i, j] + Z[k, i, j]
            logw[2 * k] = _logpi(Mbuf, Sbuf, n, p, family, a, b)
            for i in range(n):
                for j in range(p):
                    Mbuf[i, j] = X[i, j] - Z[k, i, j]
            logw[2 * k + 1] = _logpi(Mbuf, Sbuf, n, p, family, a, b)
        for k in range(2 * K):
            if logw[k] > m:
                m = logw[k]

    if m == INFINITY or isnan(m):
        raise NonFiniteEvaluation(
            "importance weight hit a singular point of the prior (measure-zero event)"
        )
    if m == -INFINITY:
        raise NonFiniteEvaluation("all importance weights vanished")

    wsum = 0.0
    wsq = 0.0
    with nogil:
        for k in range(K):
            wp = exp(logw[2 * k] - m)
            wm = exp(logw[2 * k + 1] - m)
            wsum += wp + wm
            wsq += wp * wp + wm * wm
            for i in range(n):
                for j in range(p):
                    z = Z[k, i, j]
                    num[i, j] += wp * (X[i, j] + z) + wm * (X[i, j] - z)

    num_arr /= wsum
    return num_arr, wsum * wsum / wsq


cdef inline double _logaddexp(double x, double y) noexcept nogil:
    if x == -INFINITY:
        return y
    if y == -INFINITY:
        return x
    if x >= y:
        return x + log1p(exp(y - x))
    return y + log1p(exp(x - y))


cdef double _mix_logw(double[:, ::1] M, double[:, ::1] X, Py_ssize_t n, Py_ssize_t p,
                      double c, double beta, double log1m_a, double log_a,
                      double tau2, double log_g_norm, double log_phi_norm) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double r2 = 0.0, d2 = 0.0, diff
    for i in range(n):
        for j in range(p):
            r2 += M[i, j] * M[i, j]
            diff = M[i, j] - X[i, j]
            d2 += diff * diff
    cdef double lphi = log_phi_norm - 0.5 * d2
    cdef double lpi
    if r2 + beta <= 0.0:
        return INFINITY
    lpi = -0.5 * c * log(r2 + beta)
    cdef double lg
    if r2 > 0.0 and r2 <= tau2:
        lg = log_g_norm - 0.5 * c * log(r2)
    else:
        lg = -INFINITY
    return lpi + lphi - _logaddexp(log1m_a + lphi, log_a + lg)


def is_posterior_mean_stein_mixture(double[:, ::1] X, double[:, :, ::1] Z,
                                    double[:, :, ::1] M2, double c, double beta,
                                    double mix_a, double tau, double log_g_norm):
    """Defensive-mixture SNIS posterior mean (see the python backend docstring)."""
    cdef Py_ssize_t K1 = Z.shape[0]
    cdef Py_ssize_t K2 = M2.shape[0]
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef double log_a = log(mix_a)
    cdef double log1m_a = log1p(-mix_a)
    cdef double tau2 = tau * tau
    cdef double log_phi_norm = -0.5 * (n * p) * log(2.0 * M_PI)

    logw_arr = np.empty(2 * (K1 + K2))
    Mbuf_arr = np.empty((n, p))
    num_arr = np.zeros((n, p))
    cdef double[::1] logw = logw_arr
    cdef double[:, ::1] Mbuf = Mbuf_arr
    cdef double[:, ::1] num = num_arr

    cdef Py_ssize_t k, i, j
    cdef double m = -INFINITY
    cdef double wp, wm, wsum, wsq, s

    with nogil:
        for k in range(K1):
            for i in range(n):
                for j in range(p):
                    Mbuf[i, j] = X[i, j] + Z[k, i, j]
            logw[2 * k] = _mix_logw(
                Mbuf, X, n, p, c, beta, log1m_a, log_a, tau2, log_g_norm, log_phi_norm)
            for i in range(n):
                for j in range(p):
                    Mbuf[i, j] = X[i, j] - Z[k, i, j]
            logw[2 * k + 1] = _mix_logw(
                Mbuf, X, n, p, c, beta, log1m_a, log_a, tau2, log_g_norm, log_phi_norm)
        for k in range(K2):
            for i in range(n):
                for j in range(p):
                    Mbuf[i, j] = M2[k, i, j]
            logw[2 * K1 + 2 * k] = _mix_logw(
                Mbuf, X, n, p, c, beta, log1m_a, log_a, tau2, log_g_norm, log_phi_norm)
            for i in range(n):
                for j in range(p):
                    Mbuf[i, j] = -M2[k, i, j]
            logw[2 * K1 + 2 * k + 1] = _mix_logw(
                Mbuf, X, n, p, c, beta, log1m_a, log_a, tau2, log_g_norm, log_phi_norm)
        for k in range(2 * (K1 + K2)):
            if logw[k] > m:
                m = logw[k]

    if m == INFINITY or isnan(m):
        raise NonFiniteEvaluation("degenerate mixture importance weights")
    if m == -INFINITY:
        raise NonFiniteEvaluation("all importance weights vanished")

    wsum = 0.0
    wsq = 0.0
    with nogil:
        for k in range(K1):
            wp = exp(logw[2 * k] - m)
            wm = exp(logw[2 * k + 1] - m)
            wsum += wp + wm
            wsq += wp * wp + wm * wm
            for i in range(n):
                for j in range(p):
                    s = Z[k, i, j]
                    num[i, j] += wp * (X[i, j] + s) + wm * (X[i, j] - s)
        for k in range(K2):
            wp = exp(logw[2 * K1 + 2 * k] - m)
            wm = exp(logw[2 * K1 + 2 * k + 1] - m)
            wsum += wp + wm
            wsq += wp * wp + wm * wm
            for i in range(n):
                for j in range(p):
                    s = M2[k, i, j]
                    num[i, j] += wp * s - wm * s

    num_arr /= wsum
    return num_arr, wsum * wsum / wsq
