"""Noiseless detection pipeline.

Sensors report field values without their locations.  Because every
grid value is distinct and readings are exact copies of grid values,
grouping readings by value and ordering the groups by how often they
occur recovers the location of each value whenever the per-location
sample counts are strictly increasing.  A trial is correct exactly when
that strict ordering holds, which lets the Monte Carlo estimator work
on multinomial count vectors directly instead of materializing
individual readings.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import multinomial as _multinomial

from . import kernels
from .deployment import SensorDistribution, sample_locations
from .fields import BandlimitedField, GridSamples, coefficients_from_grid, grid_samples


class ModelViolationError(RuntimeError):
    """Readings are inconsistent with the noiseless sampling model."""


class EnumerationSizeError(RuntimeError):
    """Exact enumeration would exceed the configured budget."""


@dataclass(frozen=True)
class SampleSet:
    """Readings collected without location labels."""

    b: int
    readings: np.ndarray

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("bandwidth parameter must be nonnegative")
        readings = np.array(self.readings, dtype=np.float64)
        if readings.ndim != 1 or readings.size < 1:
            raise ValueError("readings must be a nonempty 1-D array")
        readings.flags.writeable = False
        object.__setattr__(self, "readings", readings)

    @property
    def n(self) -> int:
        return int(self.readings.size)


@dataclass(frozen=True)
class TypeClustering:
    """Distinct reading values with their occurrence counts."""

    values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        counts = np.array(self.counts, dtype=np.int64)
        if values.shape != counts.shape or values.ndim != 1:
            raise ValueError("values and counts must be matching 1-D arrays")
        if np.unique(values).size != values.size:
            raise ValueError("values must be pairwise distinct")
        if np.any(counts < 1):
            raise ValueError("counts must be positive")
        values.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counts", counts)

    @property
    def pairs(self):
        return [(float(v), int(c)) for v, c in zip(self.values, self.counts)]


@dataclass(frozen=True)
class Assignment:
    """Values placed on the grid by ascending count, or an incompleteness flag."""

    b: int
    assigned: Optional[GridSamples]
    complete: bool
    tie_broken: bool


@dataclass(frozen=True)
class DetectionOutcome:
    """An Assignment scored against the ground truth."""

    assigned: Optional[GridSamples]
    complete: bool
    tie_broken: bool
    correct: bool


@dataclass(frozen=True)
class ErrorEstimate:
    """Empirical error probability with a binomial 95% confidence half-width."""

    e_hat: float
    half_width: float
    trials: int
    errors: int


def draw_samples(field: BandlimitedField, dist: SensorDistribution, n: int, rng) -> SampleSet:
    """n i.i.d. readings: each is the grid value at a location drawn from dist.

    Readings are copied from the grid-value array, so readings from the
    same location are bit-identical.
    """
    if field.b != dist.b:
        raise ValueError("field and distribution bandwidths differ")
    if n < 1:
        raise ValueError("need at least one sample")
    grid = grid_samples(field).values
    return SampleSet(b=field.b, readings=grid[sample_locations(dist, n, rng)])


def cluster_by_value(samples: SampleSet) -> TypeClustering:
    """Group readings by exact value equality.

    Noiseless readings of the same location are bit-identical, so exact
    grouping is the right notion; a tolerance would risk merging close
    grid values.  More distinct values than grid points means the input
    was not produced by the noiseless model.
    """
    values, counts = np.unique(samples.readings, return_counts=True)
    if values.size > 2 * samples.b + 1:
        raise ModelViolationError(
            f"{values.size} distinct readings exceed the {2 * samples.b + 1} grid values"
        )
    return TypeClustering(values=values, counts=counts)


def assign_locations(clusters: TypeClustering, b: int) -> Assignment:
    """Place values on the grid in ascending count order.

    With fewer than 2b+1 distinct values the assignment is incomplete.
    Equal counts are ordered by ascending value, deterministically, and
    the result is flagged as tie-broken.
    """
    m = 2 * b + 1
    if clusters.values.size > m:
        raise ModelViolationError(
            f"{clusters.values.size} clusters exceed the {m} grid values"
        )
    if clusters.values.size < m:
        return Assignment(b=b, assigned=None, complete=False, tie_broken=False)
    order = np.lexsort((clusters.values, clusters.counts))
    sorted_counts = clusters.counts[order]
    tie = bool(np.any(np.diff(sorted_counts) == 0))
    assigned = GridSamples(b=b, values=clusters.values[order])
    return Assignment(b=b, assigned=assigned, complete=True, tie_broken=tie)


def score_assignment(assignment: Assignment, truth: GridSamples) -> DetectionOutcome:
    """Score an assignment against the true grid values.

    Correct means: every value was observed, the count ordering was
    strict (no tie-break), and the assigned vector matches the truth.
    For distinct grid values this coincides with the strict ordering
    event on the location counts, so a tie that happens to land on the
    truth still scores as an error.
    """
    correct = bool(
        assignment.complete
        and not assignment.tie_broken
        and np.array_equal(assignment.assigned.values, truth.values)
    )
    return DetectionOutcome(
        assigned=assignment.assigned,
        complete=assignment.complete,
        tie_broken=assignment.tie_broken,
        correct=correct,
    )


def detect_field(samples: SampleSet, b=None):
    """Cluster, assign, and invert back to coefficients.

    Returns None when not all grid values were observed (the assignment
    is then undefined and the trial counts as a detection failure).
    """
    if b is None:
        b = samples.b
    elif b != samples.b:
        raise ValueError("bandwidth parameter disagrees with the sample set")
    assignment = assign_locations(cluster_by_value(samples), b)
    if not assignment.complete:
        return None
    return coefficients_from_grid(assignment.assigned)


def run_trial(field: BandlimitedField, dist: SensorDistribution, n: int, rng) -> DetectionOutcome:
    """One full reading-level pipeline pass, scored against the truth."""
    samples = draw_samples(field, dist, n, rng)
    assignment = assign_locations(cluster_by_value(samples), field.b)
    return score_assignment(assignment, grid_samples(field))


def monte_carlo_error(field, dist: SensorDistribution, n: int, trials: int, rng,
                      chunk_size: int = 200_000) -> ErrorEstimate:
    """Empirical detection error probability over repeated trials.

    The outcome of a noiseless trial depends only on the per-location
    sample counts, so trials draw multinomial count vectors directly and
    check the strict ordering; run_trial exercises the reading-level
    pipeline and the tests verify the two agree.  ``field`` may be None
    since the error event does not depend on the field values; when
    given, it is checked for compatibility.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n < 1:
        raise ValueError("need at least one sample per trial")
    if field is not None:
        if field.b != dist.b:
            raise ValueError("field and distribution bandwidths differ")
        g = np.sort(grid_samples(field).values)
        if g.size > 1 and float(np.min(np.diff(g))) <= 0.0:
            raise ModelViolationError("field grid values are not distinct")
    errors = 0
    remaining = trials
    while remaining > 0:
        size = min(remaining, chunk_size)
        counts = rng.multinomial(n, dist.p, size=size).astype(np.int64, copy=False)
        errors += kernels.strict_ordering_violations(counts)
        remaining -= size
    e_hat = errors / trials
    half_width = 1.96 * math.sqrt(e_hat * (1.0 - e_hat) / trials)
    return ErrorEstimate(e_hat=e_hat, half_width=half_width, trials=trials, errors=errors)


def exact_error_probability(dist: SensorDistribution, n: int,
                            max_compositions: int = 1_000_000) -> float:
    """Exact detection error by brute-force enumeration.

    Sums the multinomial pmf over every count vector of n samples on the
    2b+1 locations that violates the strict ordering.  Only feasible
    while the number of compositions stays within ``max_compositions``.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    m = dist.grid_size
    total = math.comb(n + m - 1, m - 1)
    if total > max_compositions:
        raise EnumerationSizeError(
            f"{total} compositions exceed the budget of {max_compositions}"
        )
    if m == 1:
        return 0.0
    bars = np.array(
        list(itertools.combinations(range(n + m - 1), m - 1)), dtype=np.int64
    )
    counts = np.empty((bars.shape[0], m), dtype=np.int64)
    counts[:, 0] = bars[:, 0]
    if m > 2:
        counts[:, 1:m - 1] = np.diff(bars, axis=1) - 1
    counts[:, m - 1] = n + m - 2 - bars[:, -1]
    bad = (counts[:, 0] < 1) | np.any(np.diff(counts, axis=1) <= 0, axis=1)
    if not np.any(bad):
        return 0.0
    log_pmf = _multinomial.logpmf(counts[bad], n=n, p=dist.p)
    return float(np.sum(np.exp(log_pmf)))
