"""Sensor-placement distributions over the sampling grid.

A placement is a strictly increasing probability vector p over the 2b+1
grid points.  The quantities that matter for detection are the square
root gaps d_0 = sqrt(p_0), d_i = sqrt(p_i) - sqrt(p_{i-1}): the smallest
gap controls the asymptotic decay rate of the detection error, and the
square-law placement built by optimal_distribution makes all gaps equal,
which is the best achievable rate.
"""

import math
from dataclasses import dataclass

import numpy as np

_SUM_TOL = 1e-12

LAW_NAMES = ("optimal", "linear", "cubic", "random")


@dataclass(frozen=True)
class SensorDistribution:
    """Strictly increasing probability vector over the 2b+1 grid points."""

    b: int
    p: np.ndarray

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("bandwidth parameter must be nonnegative")
        p = np.array(self.p, dtype=np.float64)
        if p.shape != (2 * self.b + 1,):
            raise ValueError(
                f"expected {2 * self.b + 1} probabilities, got shape {p.shape}"
            )
        if abs(float(p.sum()) - 1.0) > _SUM_TOL:
            raise ValueError("probabilities must sum to 1")
        if p[0] <= 0.0 or np.any(np.diff(p) <= 0.0):
            raise ValueError("probabilities must be positive and strictly increasing")
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def grid_size(self) -> int:
        return 2 * self.b + 1


@dataclass(frozen=True)
class ExponentReport:
    """Square-root gaps and per-event error exponents of a placement.

    d[0] is sqrt(p_0) and d[i] = sqrt(p_i) - sqrt(p_{i-1}).  exponents[0]
    (bits per sample) belongs to the event that location 0 is never
    sampled; exponents[i] for i >= 1 belongs to the event that location
    i-1 collects at least as many samples as location i.  The smallest
    entry governs the asymptotic decay of the detection error.
    """

    d: np.ndarray
    d_min: float
    exponents: np.ndarray
    min_exponent: float


def optimal_distribution(b: int) -> SensorDistribution:
    """The square-law placement p_i = 3(i+1)^2 / ((b+1)(2b+1)(4b+3)).

    This choice equalizes all square-root gaps, which maximizes the
    minimum per-event exponent over all strictly increasing placements.
    """
    if b < 0:
        raise ValueError("bandwidth parameter must be nonnegative")
    i = np.arange(2 * b + 1, dtype=np.float64)
    p = 3.0 * (i + 1.0) ** 2 / ((b + 1) * (2 * b + 1) * (4 * b + 3))
    return SensorDistribution(b=b, p=p)


def linear_distribution(b: int) -> SensorDistribution:
    """Placement with p_i proportional to i+1."""
    i = np.arange(2 * b + 1, dtype=np.float64)
    w = i + 1.0
    return SensorDistribution(b=b, p=w / w.sum())


def cubic_distribution(b: int) -> SensorDistribution:
    """Placement with p_i proportional to (i+1)^3."""
    i = np.arange(2 * b + 1, dtype=np.float64)
    w = (i + 1.0) ** 3
    return SensorDistribution(b=b, p=w / w.sum())


def random_ordered_distribution(b: int, rng, max_retries: int = 1000) -> SensorDistribution:
    """Sorted, normalized i.i.d. uniform draws.

    Ties or zero entries have probability zero but are guarded against
    for floating point's sake by redrawing.
    """
    for _ in range(max_retries):
        u = np.sort(rng.random(2 * b + 1))
        if u[0] <= 0.0 or np.any(np.diff(u) <= 0.0):
            continue
        p = u / u.sum()
        if p[0] > 0.0 and np.all(np.diff(p) > 0.0):
            return SensorDistribution(b=b, p=p)
    raise RuntimeError("could not draw a strictly ordered distribution")


def distribution_for_law(law: str, b: int, rng=None) -> SensorDistribution:
    """Build the named placement law; 'random' consumes draws from rng."""
    if law == "optimal":
        return optimal_distribution(b)
    if law == "linear":
        return linear_distribution(b)
    if law == "cubic":
        return cubic_distribution(b)
    if law == "random":
        if rng is None:
            raise ValueError("the random law needs an rng")
        return random_ordered_distribution(b, rng)
    raise ValueError(f"unknown law {law!r}; expected one of {', '.join(LAW_NAMES)}")


def exponent_report(dist: SensorDistribution) -> ExponentReport:
    """Square-root gaps and closed-form per-event exponents for a placement."""
    r = np.sqrt(dist.p)
    d = np.empty_like(r)
    d[0] = r[0]
    d[1:] = np.diff(r)
    exponents = np.empty_like(d)
    with np.errstate(divide="ignore"):
        exponents[0] = -np.log2(1.0 - dist.p[0])
        exponents[1:] = -np.log2(1.0 - d[1:] ** 2)
    return ExponentReport(
        d=d,
        d_min=float(d.min()),
        exponents=exponents,
        min_exponent=float(exponents.min()),
    )


def event_labels(b: int) -> list:
    """Human-readable names for the 2b+1 error events, matching
    ExponentReport ordering."""
    return ["N0=0"] + [f"N{i}>=N{i + 1}" for i in range(2 * b)]


def required_samples(dist: SensorDistribution, epsilon: float) -> int:
    """Smallest n with (2b+1)(1 - d_min^2)^n <= epsilon.

    This is a sufficient sample size: at or above it the detection error
    probability is at most epsilon.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    d_min = exponent_report(dist).d_min
    if d_min >= 1.0:
        return 1
    n = math.ceil(
        (math.log(epsilon) - math.log(dist.grid_size))
        / math.log(1.0 - d_min * d_min)
    )
    return max(int(n), 1)


def sample_locations(dist: SensorDistribution, size: int, rng) -> np.ndarray:
    """Vector of i.i.d. location indices drawn from the placement."""
    cdf = np.cumsum(dist.p)
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, dist.grid_size - 1).astype(np.int64)


def sample_location(dist: SensorDistribution, rng) -> int:
    """One location index drawn from the placement (inverse CDF)."""
    return int(sample_locations(dist, 1, rng)[0])


def distribution_to_json_dict(dist: SensorDistribution, law=None) -> dict:
    record = {"b": int(dist.b), "p": [float(v) for v in dist.p]}
    if law is not None:
        record["law"] = str(law)
    return record


def distribution_from_json_dict(record: dict) -> SensorDistribution:
    return SensorDistribution(b=int(record["b"]), p=np.asarray(record["p"], dtype=np.float64))
