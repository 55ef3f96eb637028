"""Reconstruction from noise-corrupted readings.

With Gaussian reading noise the observations follow a mixture of 2b+1
equal-variance Gaussians whose weights are the placement probabilities.
The pipeline: seed centers with k-means++, fit the mixture by EM with
the variance held at its known value, assign means to grid locations by
ascending weight (the noisy counterpart of ordering by counts), and
invert back to coefficients.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .deployment import optimal_distribution
from .detection import SampleSet, draw_samples
from .fields import (
    GridSamples,
    coefficients_from_grid,
    distortion,
    grid_samples,
    random_field,
)


class InitializationError(RuntimeError):
    """k-means++ cannot seed more centers than there are distinct readings."""


class DegenerateComponentError(RuntimeError):
    """A mixture component lost essentially all responsibility mass."""

    def __init__(self, component: int, iteration: int):
        super().__init__(
            f"component {component} collapsed at iteration {iteration}"
        )
        self.component = component
        self.iteration = iteration


@dataclass(frozen=True)
class NoisySampleSet:
    """Readings corrupted by zero-mean Gaussian noise of known sigma."""

    b: int
    readings: np.ndarray
    sigma: float

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("bandwidth parameter must be nonnegative")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        readings = np.array(self.readings, dtype=np.float64)
        if readings.ndim != 1 or readings.size < 2 * self.b + 1:
            raise ValueError(
                f"need at least {2 * self.b + 1} readings, got {readings.size}"
            )
        readings.flags.writeable = False
        object.__setattr__(self, "readings", readings)

    @property
    def n(self) -> int:
        return int(self.readings.size)


@dataclass(frozen=True)
class GmmEstimate:
    """Fitted mixture: 2b+1 means and weights, variance held fixed."""

    means: np.ndarray
    weights: np.ndarray
    sigma: float
    iterations: int
    converged: bool
    loglik_trace: np.ndarray


@dataclass(frozen=True)
class MembershipMatrix:
    """Soft assignment of each reading to each component; rows sum to 1."""

    gamma: np.ndarray


def add_noise(samples: SampleSet, sigma: float, rng) -> NoisySampleSet:
    """Perturb every reading with independent N(0, sigma^2) noise."""
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    noisy = samples.readings + rng.normal(0.0, sigma, size=samples.readings.size)
    return NoisySampleSet(b=samples.b, readings=noisy, sigma=float(sigma))


def kmeanspp_init(readings, k: int, rng) -> np.ndarray:
    """Standard k-means++ seeding over scalar readings.

    The first center is a uniformly chosen reading; each further center
    is a reading drawn with probability proportional to its squared
    distance from the nearest center chosen so far.  Centers are always
    members of the reading set.
    """
    y = np.asarray(readings, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > np.unique(y).size:
        raise InitializationError(
            f"cannot place {k} centers among {np.unique(y).size} distinct readings"
        )
    centers = np.empty(k, dtype=np.float64)
    centers[0] = y[rng.integers(y.size)]
    d2 = (y - centers[0]) ** 2
    for j in range(1, k):
        total = float(d2.sum())
        centers[j] = y[rng.choice(y.size, p=d2 / total)]
        d2 = np.minimum(d2, (y - centers[j]) ** 2)
    return centers


def em_fit(samples: NoisySampleSet, init_means, tol: float = 1e-8,
           max_iter: int = 500) -> GmmEstimate:
    """Fit the fixed-variance mixture by EM from the given initial means.

    Weights start uniform.  Each iteration computes responsibilities in
    log space (per-row max subtraction, safe at small sigma), then
    updates each mean to its responsibility-weighted average and each
    weight to its responsibility mass over n.  Stops when the squared
    distance between successive mean vectors drops below tol, or at
    max_iter with converged=False.  A component whose responsibility
    mass falls below 1e-12 * n aborts the fit.
    """
    k = 2 * samples.b + 1
    init = np.asarray(init_means, dtype=np.float64)
    if init.shape != (k,):
        raise ValueError(f"expected {k} initial means, got shape {init.shape}")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    weights0 = np.full(k, 1.0 / k)
    floor = 1e-12 * samples.n
    means, weights, n_iter, converged, logliks, degenerate_k = kernels.em_run(
        samples.readings, init, weights0, samples.sigma, tol, max_iter, floor
    )
    if degenerate_k >= 0:
        raise DegenerateComponentError(component=degenerate_k, iteration=n_iter)
    return GmmEstimate(
        means=means,
        weights=weights,
        sigma=samples.sigma,
        iterations=int(n_iter),
        converged=bool(converged),
        loglik_trace=np.asarray(logliks),
    )


def membership_matrix(samples: NoisySampleSet, est: GmmEstimate) -> MembershipMatrix:
    """Responsibilities of each component for each reading at the given fit."""
    with np.errstate(divide="ignore"):
        log_prior = np.log(est.weights)[None, :]
    log_post = log_prior - (
        (samples.readings[:, None] - est.means[None, :]) ** 2
        / (2.0 * est.sigma ** 2)
    )
    log_post -= log_post.max(axis=1, keepdims=True)
    z = np.exp(log_post)
    return MembershipMatrix(gamma=z / z.sum(axis=1, keepdims=True))


def reconstruct_from_gmm(est: GmmEstimate, tie_tol: float = 1e-12):
    """Assign means to grid locations by ascending weight and invert.

    Weight ties within tie_tol are broken by ascending mean; that makes
    the result deterministic but no longer frequency-identified, so a
    warning is emitted.
    """
    k = est.means.size
    b = (k - 1) // 2
    if 2 * b + 1 != k:
        raise ValueError("component count must be odd")
    order = np.lexsort((est.means, est.weights))
    sorted_weights = est.weights[order]
    if np.any(np.diff(sorted_weights) <= tie_tol):
        warnings.warn(
            "mixture weight tie broken by mean order", RuntimeWarning, stacklevel=2
        )
    return coefficients_from_grid(GridSamples(b=b, values=est.means[order]))


@dataclass(frozen=True)
class OverlapDiagnostic:
    """Minimum pairwise squared distance between grid values, against the
    6 sigma^2 overlap threshold."""

    d_g: float
    threshold: float
    overlapping: bool


def overlap_diagnostic(truth: GridSamples, sigma: float) -> OverlapDiagnostic:
    """Flag fields whose closest grid values sit within 6 sigma^2.

    Clusters closer than that overlap with high probability and the
    weight ordering becomes unreliable.
    """
    v = truth.values
    diffs = (v[:, None] - v[None, :]) ** 2
    off_diagonal = ~np.eye(v.size, dtype=bool)
    d_g = float(np.min(diffs[off_diagonal])) if v.size > 1 else math.inf
    threshold = 6.0 * sigma * sigma
    return OverlapDiagnostic(
        d_g=d_g, threshold=threshold, overlapping=bool(d_g < threshold)
    )


@dataclass(frozen=True)
class FieldResult:
    """One field's trip through the noisy pipeline."""

    field_id: int
    distortion: float
    d_g: float
    overlapping: bool
    iterations: int
    converged: bool
    failed: bool


def best_of_restarts(samples: NoisySampleSet, restarts: int, rng,
                     tol: float = 1e-8, max_iter: int = 500) -> GmmEstimate:
    """Fit the mixture from several independent seedings, keep the best.

    Fixed-variance EM is prone to local optima when two cluster means sit
    close together: a single seeding can leave one cluster uncovered and
    split another, and the iteration never recovers.  Running a handful of
    independent seedings and keeping the fit with the highest final
    log-likelihood is the standard remedy.  Raises whichever error the
    last seeding produced if every restart fails.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    k = 2 * samples.b + 1
    best = None
    failure = None
    for _ in range(restarts):
        try:
            init = kmeanspp_init(samples.readings, k, rng)
            est = em_fit(samples, init, tol=tol, max_iter=max_iter)
        except (InitializationError, DegenerateComponentError) as exc:
            failure = exc
            continue
        if best is None or est.loglik_trace[-1] > best.loglik_trace[-1]:
            best = est
    if best is None:
        raise failure
    return best


def noisy_experiment(b: int, n: int, sigma: float, num_fields: int, rng,
                     amplitude_bound: float = 1.0, tol: float = 1e-8,
                     max_iter: int = 500, restarts: int = 3):
    """Run the noisy pipeline on num_fields random fields.

    Each field gets its own deterministic child stream of rng.  Samples
    are drawn under the square-law placement and fitted with
    best_of_restarts.  Per-field failures (seeding shortfalls, collapsed
    components) are recorded with failed=True and NaN distortion rather
    than aborting the run.
    """
    if num_fields < 1:
        raise ValueError("num_fields must be at least 1")
    dist = optimal_distribution(b)
    results = []
    for field_id in range(num_fields):
        sub = rng.spawn(1)[0]
        field = random_field(b, sub, amplitude_bound)
        diag = overlap_diagnostic(grid_samples(field), sigma)
        noisy = add_noise(draw_samples(field, dist, n, sub), sigma, sub)
        try:
            est = best_of_restarts(noisy, restarts, sub, tol=tol,
                                   max_iter=max_iter)
            value = distortion(reconstruct_from_gmm(est), field)
            results.append(FieldResult(
                field_id=field_id, distortion=value, d_g=diag.d_g,
                overlapping=diag.overlapping, iterations=est.iterations,
                converged=est.converged, failed=False,
            ))
        except (InitializationError, DegenerateComponentError):
            results.append(FieldResult(
                field_id=field_id, distortion=math.nan, d_g=diag.d_g,
                overlapping=diag.overlapping, iterations=0,
                converged=False, failed=True,
            ))
    return results
