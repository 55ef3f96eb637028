"""Pure numpy implementations of the numerical hot loops.

kernels.py prefers the compiled twins in _ckernels and falls back to
these.  The two implementations must keep identical semantics; the test
suite compares them directly.
"""

import math

import numpy as np

_LOG_2PI = 1.8378770664093453


def strict_ordering_violations(counts):
    """Number of rows of ``counts`` failing 0 < c[0] < c[1] < ... < c[m-1]."""
    c = np.asarray(counts)
    bad = c[:, 0] < 1
    if c.shape[1] > 1:
        bad |= np.any(np.diff(c, axis=1) <= 0, axis=1)
    return int(np.count_nonzero(bad))


def em_run(y, means0, weights0, sigma, tol, max_iter, degenerate_floor):
    """Fixed-variance scalar Gaussian mixture EM loop.

    Returns ``(means, weights, n_iter, converged, logliks, degenerate_k)``.
    ``logliks[t]`` is the observed-data log-likelihood of the parameters
    held at the start of iteration t.  ``degenerate_k`` is -1, or the
    index of the first component whose responsibility mass fell below
    ``degenerate_floor``; iteration stops there with the pre-update state.
    Convergence means the squared Euclidean distance between successive
    mean vectors dropped below ``tol``.
    """
    y = np.asarray(y, dtype=np.float64)
    means = np.array(means0, dtype=np.float64)
    weights = np.array(weights0, dtype=np.float64)
    n = y.size
    inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma)
    ll_const = -n * (math.log(sigma) + 0.5 * _LOG_2PI)
    logliks = []
    converged = False
    degenerate_k = -1
    n_iter = 0
    for _ in range(max_iter):
        with np.errstate(divide="ignore"):
            log_prior = np.log(weights)
        log_post = log_prior[None, :] - (y[:, None] - means[None, :]) ** 2 * inv_two_sigma_sq
        row_max = log_post.max(axis=1)
        z = np.exp(log_post - row_max[:, None])
        row_sum = z.sum(axis=1)
        logliks.append(float(np.sum(np.log(row_sum) + row_max)) + ll_const)
        gamma = z / row_sum[:, None]
        mass = gamma.sum(axis=0)
        n_iter += 1
        low = np.flatnonzero(mass < degenerate_floor)
        if low.size:
            degenerate_k = int(low[0])
            break
        new_means = gamma.T @ y / mass
        shift = float(np.sum((new_means - means) ** 2))
        means = new_means
        weights = mass / n
        if shift < tol:
            converged = True
            break
    return means, weights, n_iter, converged, np.asarray(logliks), degenerate_k
