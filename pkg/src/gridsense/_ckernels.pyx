# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in _pykernels (same signatures, same
semantics).  Kept free of the numpy C API on purpose; plain memoryviews
are enough here."""

from libc.math cimport exp, log

import numpy as np

cdef double _LOG_2PI = 1.8378770664093453


def strict_ordering_violations(const long long[:, ::1] counts):
    """Number of rows of ``counts`` failing 0 < c[0] < c[1] < ... < c[m-1]."""
    cdef Py_ssize_t n_rows = counts.shape[0]
    cdef Py_ssize_t m = counts.shape[1]
    cdef Py_ssize_t i, j
    cdef long long prev
    cdef long long violations = 0
    cdef bint bad
    for i in range(n_rows):
        bad = counts[i, 0] < 1
        if not bad:
            prev = counts[i, 0]
            for j in range(1, m):
                if counts[i, j] <= prev:
                    bad = True
                    break
                prev = counts[i, j]
        if bad:
            violations += 1
    return int(violations)


def em_run(const double[::1] y, const double[::1] means0,
           const double[::1] weights0, double sigma, double tol,
           long max_iter, double degenerate_floor):
    """Fixed-variance scalar Gaussian mixture EM loop; see _pykernels.em_run."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t k = means0.shape[0]

    means_arr = np.asarray(means0).copy()
    weights_arr = np.asarray(weights0).copy()
    mass_arr = np.empty(k, dtype=np.float64)
    wsum_arr = np.empty(k, dtype=np.float64)
    logw_arr = np.empty(k, dtype=np.float64)
    row_arr = np.empty(k, dtype=np.float64)

    cdef double[::1] means = means_arr
    cdef double[::1] weights = weights_arr
    cdef double[::1] mass = mass_arr
    cdef double[::1] wsum = wsum_arr
    cdef double[::1] logw = logw_arr
    cdef double[::1] row = row_arr

    cdef double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma)
    cdef double ll_const = -n * (log(sigma) + 0.5 * _LOG_2PI)
    cdef long n_iter = 0
    cdef bint converged = False
    cdef long degenerate_k = -1
    cdef Py_ssize_t i, j
    cdef long it
    cdef double diff, row_max, row_sum, ll, resp, new_mean, shift
    logliks = []

    for it in range(max_iter):
        for j in range(k):
            logw[j] = log(weights[j]) if weights[j] > 0.0 else -1e308
            mass[j] = 0.0
            wsum[j] = 0.0
        ll = 0.0
        for i in range(n):
            row_max = -1e308
            for j in range(k):
                diff = y[i] - means[j]
                row[j] = logw[j] - diff * diff * inv_two_sigma_sq
                if row[j] > row_max:
                    row_max = row[j]
            row_sum = 0.0
            for j in range(k):
                row[j] = exp(row[j] - row_max)
                row_sum += row[j]
            ll += log(row_sum) + row_max
            for j in range(k):
                resp = row[j] / row_sum
                mass[j] += resp
                wsum[j] += resp * y[i]
        logliks.append(ll + ll_const)
        n_iter = it + 1
        degenerate_k = -1
        for j in range(k):
            if mass[j] < degenerate_floor:
                degenerate_k = j
                break
        if degenerate_k >= 0:
            break
        shift = 0.0
        for j in range(k):
            new_mean = wsum[j] / mass[j]
            diff = new_mean - means[j]
            shift += diff * diff
            means[j] = new_mean
            weights[j] = mass[j] / n
        if shift < tol:
            converged = True
            break

    return (means_arr, weights_arr, int(n_iter), bool(converged),
            np.asarray(logliks, dtype=np.float64), int(degenerate_k))
