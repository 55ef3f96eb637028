"""Reconstruction of bandlimited fields from location-unaware sensors.

A field bandlimited to b harmonics takes at most 2b+1 distinct values on
the uniform grid with spacing 1/(2b+1).  Sensors dropped at random report
only their reading, not their position; with the right placement density
the sorted frequencies of the readings recover the field exactly, and a
fixed-variance mixture fit does the same job when the readings are noisy.
"""

from .deployment import (
    LAW_NAMES,
    ExponentReport,
    SensorDistribution,
    cubic_distribution,
    distribution_for_law,
    distribution_from_json_dict,
    distribution_to_json_dict,
    event_labels,
    exponent_report,
    linear_distribution,
    optimal_distribution,
    random_ordered_distribution,
    required_samples,
    sample_location,
    sample_locations,
)
from .detection import (
    Assignment,
    DetectionOutcome,
    EnumerationSizeError,
    ErrorEstimate,
    ModelViolationError,
    SampleSet,
    TypeClustering,
    assign_locations,
    cluster_by_value,
    detect_field,
    draw_samples,
    exact_error_probability,
    monte_carlo_error,
    run_trial,
    score_assignment,
)
from .divergence import (
    EstimationError,
    SimplexPoint,
    constrained_kl_min,
    decade_slope,
    empirical_exponent,
    kl_divergence,
    zero_event_kl_min,
)
from .fields import (
    BandlimitedField,
    ConjugateSymmetryError,
    FieldGenerationError,
    GridSamples,
    coefficients_from_grid,
    distortion,
    effective_bandwidth,
    embedded_field,
    evaluate,
    field_from_json_dict,
    field_to_json_dict,
    flipped_field,
    grid_samples,
    level_set_measure,
    level_set_profile,
    random_field,
    scaled_field,
    shifted_field,
)
from .noisy import (
    DegenerateComponentError,
    FieldResult,
    GmmEstimate,
    InitializationError,
    MembershipMatrix,
    NoisySampleSet,
    OverlapDiagnostic,
    add_noise,
    best_of_restarts,
    em_fit,
    kmeanspp_init,
    membership_matrix,
    noisy_experiment,
    overlap_diagnostic,
    reconstruct_from_gmm,
)

__version__ = "0.1.0"
