"""Divergence tools behind the error-exponent analysis.

The probability that empirical location frequencies fall in a bad set
decays like 2^(-n D), where D is the smallest KL divergence (in bits)
from the set to the placement p.  This module computes KL divergence,
numerically minimizes it under the ordering constraints that define the
error events, and estimates decay slopes from empirical error curves.
The minimizer is derivative-free on purpose: it serves as an oracle for
closed-form exponent expressions and must not share their derivation.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr, xlogy

from .deployment import SensorDistribution

_LN2 = math.log(2.0)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class EstimationError(RuntimeError):
    """Too few usable points to estimate an exponent."""


@dataclass(frozen=True)
class SimplexPoint:
    """A probability vector: nonnegative entries summing to 1."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        if q.ndim != 1 or q.size < 1:
            raise ValueError("q must be a nonempty 1-D array")
        if float(q.min()) < 0.0:
            raise ValueError("entries must be nonnegative")
        if abs(float(q.sum()) - 1.0) > 1e-12:
            raise ValueError("entries must sum to 1")
        q.flags.writeable = False
        object.__setattr__(self, "q", q)


def kl_divergence(q, p) -> float:
    """D(q || p) in bits, with 0 log 0 = 0; infinite when q charges a
    zero-probability coordinate of p.

    Accepts SimplexPoint / SensorDistribution instances or plain arrays.
    """
    qv = np.asarray(q.q if isinstance(q, SimplexPoint) else q, dtype=np.float64)
    pv = np.asarray(p.p if isinstance(p, SensorDistribution) else p, dtype=np.float64)
    if qv.shape != pv.shape:
        raise ValueError("q and p must have the same length")
    return float(np.sum(rel_entr(qv, pv)) / _LN2)


def _golden_section(f, lo: float, hi: float, iters: int = 120):
    """Minimize a unimodal scalar function on [lo, hi]."""
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, float(f(x))


def _slice_value(qa, qb, pa, pb, rest_mass, p_rest):
    """KL value (bits) of the point with the two constrained coordinates
    fixed and the leftover mass spread over the remaining coordinates in
    proportion to p, which is the cheapest way to place a fixed total."""
    return (
        xlogy(qa, qa / pa) + xlogy(qb, qb / pb) + xlogy(rest_mass, rest_mass / p_rest)
    ) / _LN2


def constrained_kl_min(p: SensorDistribution, event_index: int, grid_step: float = 1e-3):
    """Numerically minimize D(q || p) subject to q[i+1] <= q[i].

    Derivative-free projected search: a dense 2-D grid over the two
    constrained coordinates (leftover mass spread proportionally to p),
    then golden-section refinement along the equality face
    q[i] = q[i+1].  Returns (minimizer, value in bits).
    """
    m = p.grid_size
    if not 0 <= event_index <= m - 2:
        raise ValueError(
            f"event_index {event_index} out of range for {m} grid locations"
        )
    pa = float(p.p[event_index])
    pb = float(p.p[event_index + 1])
    p_rest = 1.0 - pa - pb

    t = np.arange(grid_step, 1.0, grid_step)
    qa = t[:, None]
    qb = t[None, :]
    rest_mass = 1.0 - qa - qb
    feasible = (qb <= qa) & (rest_mass >= 0.0)
    values = _slice_value(qa, qb, pa, pb, np.maximum(rest_mass, 0.0), p_rest)
    values = np.where(feasible, values, np.inf)
    i0, j0 = np.unravel_index(int(np.argmin(values)), values.shape)
    grid_best = float(values[i0, j0])

    # The unconstrained optimum q = p is infeasible (p is strictly
    # increasing), so the minimum sits on the face q[i] = q[i+1]; the
    # face objective is convex in the shared coordinate.
    def face(tv):
        return float(_slice_value(tv, tv, pa, pb, 1.0 - 2.0 * tv, p_rest))

    t_star, face_best = _golden_section(face, 1e-12, 0.5 - 1e-12)

    if face_best <= grid_best:
        q = np.empty(m, dtype=np.float64)
        rest = (1.0 - 2.0 * t_star) / p_rest
        q[:] = p.p * rest
        q[event_index] = t_star
        q[event_index + 1] = t_star
        value = face_best
    else:
        q = np.empty(m, dtype=np.float64)
        rest = float(rest_mass[i0, j0]) / p_rest
        q[:] = p.p * rest
        q[event_index] = t[i0]
        q[event_index + 1] = t[j0]
        value = grid_best
    return SimplexPoint(q=q), float(value)


def zero_event_kl_min(p: SensorDistribution, grid_step: float = 1e-3):
    """Numeric minimum of D(q || p) over {q : q[0] = 0}.

    After spreading the tail proportionally to p, one scalar remains
    free (the mass on location 1); grid scan plus golden-section, as in
    constrained_kl_min.  With a single grid location the constraint is
    infeasible and the value is infinite (minimizer None).
    """
    m = p.grid_size
    if m == 1:
        return None, math.inf
    p1 = float(p.p[1])
    p_rest = float(np.sum(p.p[2:])) if m > 2 else 0.0

    if m == 2:
        q = np.array([0.0, 1.0])
        return SimplexPoint(q=q), kl_divergence(q, p)

    def f(tv):
        return float((xlogy(tv, tv / p1) + xlogy(1.0 - tv, (1.0 - tv) / p_rest)) / _LN2)

    ts = np.arange(grid_step, 1.0, grid_step)
    grid_vals = (xlogy(ts, ts / p1) + xlogy(1.0 - ts, (1.0 - ts) / p_rest)) / _LN2
    grid_best = float(np.min(grid_vals))
    t_star, value = _golden_section(f, 1e-12, 1.0 - 1e-12)
    if grid_best < value:
        t_star = float(ts[int(np.argmin(grid_vals))])
        value = grid_best
    q = np.empty(m, dtype=np.float64)
    q[2:] = p.p[2:] * ((1.0 - t_star) / p_rest)
    q[0] = 0.0
    q[1] = t_star
    return SimplexPoint(q=q), float(value)


def empirical_exponent(curve) -> float:
    """Least-squares decay slope of -log2(e_n) against n, in bits/sample.

    Points with e_n outside (0, 1) are dropped; the fit uses the
    largest-n half of what survives.
    """
    pts = sorted((float(n), float(e)) for n, e in curve if 0.0 < float(e) < 1.0)
    if len(pts) < 3:
        raise EstimationError("need at least 3 points with error in (0, 1)")
    tail = pts[len(pts) // 2:]
    ns = np.array([n for n, _ in tail])
    ys = -np.log2(np.array([e for _, e in tail]))
    return float(np.polyfit(ns, ys, 1)[0])


def decade_slope(curve, e_min: float = 1e-4, e_max: float = 0.5) -> float:
    """Decay slope over the largest decade of n with errors in (e_min, e_max)."""
    pts = sorted((float(n), float(e)) for n, e in curve if e_min < float(e) < e_max)
    if not pts:
        raise EstimationError("no points with error in the usable range")
    n_hi = pts[-1][0]
    window = [(n, e) for n, e in pts if n >= n_hi / 10.0]
    if len(window) < 3:
        raise EstimationError("need at least 3 points inside the final decade")
    ns = np.array([n for n, _ in window])
    ys = -np.log2(np.array([e for _, e in window]))
    return float(np.polyfit(ns, ys, 1)[0])
