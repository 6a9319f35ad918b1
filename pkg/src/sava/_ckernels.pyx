# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels. Same contract as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()

NAME = "cython"


def absorb_hoeffding(double log_a, double log_b, double max_a, double max_b,
                     long r, xs, double K, double alpha):
    cdef const double[::1] v = np.ascontiguousarray(xs, dtype=np.float64)
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double c = 8.0 * log(2.0 / alpha)
    cdef double inv = 1.0 / (2.0 * K)
    cdef double lam, q, s
    for i in range(n):
        r += 1
        lam = sqrt(c / (r * log(r + 1.0)))
        if lam > 1.0:
            lam = 1.0
        q = lam * lam / 8.0
        s = lam * v[i] * inv
        log_a += s - q
        log_b += -s - q
        if log_a > max_a:
            max_a = log_a
        if log_b > max_b:
            max_b = log_b
    return log_a, log_b, max_a, max_b, r


def absorb_gaussian(double log_a, double log_b, double max_a, double max_b,
                    xs, double mu_abs):
    cdef const double[::1] v = np.ascontiguousarray(xs, dtype=np.float64)
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double two_mu = 2.0 * mu_abs
    cdef double s
    for i in range(n):
        s = two_mu * v[i]
        log_a += s
        log_b -= s
        if log_a > max_a:
            max_a = log_a
        if log_b > max_b:
            max_b = log_b
    return log_a, log_b, max_a, max_b


def hoeffding_batch(X, double K, double alpha):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n_rows = x.shape[0], horizon = x.shape[1]
    cdef Py_ssize_t i, t
    cdef double[::1] lam = np.empty(horizon)
    cdef double[::1] drift = np.empty(horizon)
    cdef double c = 8.0 * log(2.0 / alpha)
    cdef double inv = 1.0 / (2.0 * K)
    cdef double la, lb, ma, mb, s
    out = np.zeros((4, n_rows))
    cdef double[:, ::1] o = out
    for t in range(horizon):
        lam[t] = sqrt(c / ((t + 1.0) * log(t + 2.0)))
        if lam[t] > 1.0:
            lam[t] = 1.0
        drift[t] = lam[t] * lam[t] / 8.0
        lam[t] = lam[t] * inv
    for i in range(n_rows):
        la = 0.0
        lb = 0.0
        ma = 0.0
        mb = 0.0
        for t in range(horizon):
            s = lam[t] * x[i, t]
            la += s - drift[t]
            lb += -s - drift[t]
            if la > ma:
                ma = la
            if lb > mb:
                mb = lb
        o[0, i] = la
        o[1, i] = lb
        o[2, i] = ma
        o[3, i] = mb
    return out[0].copy(), out[1].copy(), out[2].copy(), out[3].copy()


def signed_rank_counts(long n):
    cdef long top = n * (n + 1) // 2
    counts = np.zeros(top + 1)
    cdef double[::1] c = counts
    cdef long k, s, reach = 0
    c[0] = 1.0
    for k in range(1, n + 1):
        reach += k
        s = reach
        while s >= k:
            c[s] += c[s - k]
            s -= 1
    return counts
