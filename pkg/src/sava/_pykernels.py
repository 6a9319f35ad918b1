"""Pure-Python implementations of the numeric kernels.

Mirrors the signatures in ``_ckernels.pyx`` exactly; ``sava.kernels`` picks
one of the two at import time.
"""
from math import log, sqrt

import numpy as np

NAME = "python"


def absorb_hoeffding(log_a, log_b, max_a, max_b, r, xs, K, alpha):
    c = 8.0 * log(2.0 / alpha)
    inv = 1.0 / (2.0 * K)
    for x in xs:
        r += 1
        lam = sqrt(c / (r * log(r + 1.0)))
        if lam > 1.0:
            lam = 1.0
        q = lam * lam / 8.0
        s = lam * x * inv
        log_a += s - q
        log_b += -s - q
        if log_a > max_a:
            max_a = log_a
        if log_b > max_b:
            max_b = log_b
    return log_a, log_b, max_a, max_b, r


def absorb_gaussian(log_a, log_b, max_a, max_b, xs, mu_abs):
    two_mu = 2.0 * mu_abs
    for x in xs:
        s = two_mu * x
        log_a += s
        log_b -= s
        if log_a > max_a:
            max_a = log_a
        if log_b > max_b:
            max_b = log_b
    return log_a, log_b, max_a, max_b


def hoeffding_batch(X, K, alpha):
    """Run one Hoeffding e-process pair per row of ``X`` from a fresh state.

    Returns ``(final_log_a, final_log_b, max_log_a, max_log_b)``, one entry
    per row; maxima include the empty-product value 0.
    """
    X = np.asarray(X, dtype=np.float64)
    n_rows, horizon = X.shape
    r = np.arange(1, horizon + 1, dtype=np.float64)
    lam = np.minimum(np.sqrt(8.0 * np.log(2.0 / alpha) / (r * np.log(r + 1.0))), 1.0)
    drift = lam * lam / 8.0
    s = X * (lam / (2.0 * K))
    path_a = np.cumsum(s - drift, axis=1)
    path_b = np.cumsum(-s - drift, axis=1)
    if horizon == 0:
        zeros = np.zeros(n_rows)
        return zeros, zeros.copy(), zeros.copy(), zeros.copy()
    max_a = np.maximum(path_a.max(axis=1), 0.0)
    max_b = np.maximum(path_b.max(axis=1), 0.0)
    return path_a[:, -1].copy(), path_b[:, -1].copy(), max_a, max_b


def signed_rank_counts(n):
    """Number of sign patterns of ranks 1..n giving each positive-rank sum."""
    top = n * (n + 1) // 2
    counts = [0.0] * (top + 1)
    counts[0] = 1.0
    reach = 0
    for k in range(1, n + 1):
        reach += k
        for s in range(reach, k - 1, -1):
            counts[s] += counts[s - k]
    return np.array(counts)
