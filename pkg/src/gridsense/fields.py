"""Bandlimited periodic fields on the unit interval.

A field with bandwidth parameter b is a trigonometric polynomial with
2b+1 complex coefficients a[-b..b].  Real-valued fields satisfy
a[-k] = conj(a[k]).  The natural sampling grid has spacing 1/(2b+1), and
the coefficients are recoverable from the 2b+1 grid values by a single
orthogonal matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_IMAG_TOL = 1e-9
_EVAL_CHUNK = 1 << 16


class ConjugateSymmetryError(RuntimeError):
    """Field evaluation produced a non-negligible imaginary part."""


class FieldGenerationError(RuntimeError):
    """Random field generation exhausted its rejection budget."""


@dataclass(frozen=True)
class BandlimitedField:
    """Trigonometric polynomial with coefficients a[-b..b].

    ``coeffs[i]`` holds a[i - b], so the array runs from frequency -b up
    to +b.  Instances are immutable; the coefficient array is marked
    read-only on construction.
    """

    b: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("bandwidth parameter must be nonnegative")
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.shape != (2 * self.b + 1,):
            raise ValueError(
                f"expected {2 * self.b + 1} coefficients, got shape {coeffs.shape}"
            )
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def grid_size(self) -> int:
        return 2 * self.b + 1


@dataclass(frozen=True)
class GridSamples:
    """Field values on the natural grid; entry i is the value at i/(2b+1)."""

    b: int
    values: np.ndarray

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("bandwidth parameter must be nonnegative")
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (2 * self.b + 1,):
            raise ValueError(
                f"expected {2 * self.b + 1} grid values, got shape {values.shape}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def _coefficient_scale(field: BandlimitedField) -> float:
    return float(np.max(np.abs(field.coeffs)))


def _evaluate_real(field: BandlimitedField, xs: np.ndarray) -> np.ndarray:
    """Evaluate the Fourier sum at many points, verifying the result is real."""
    xs = np.asarray(xs, dtype=np.float64)
    k = np.arange(-field.b, field.b + 1)
    tol = _IMAG_TOL * _coefficient_scale(field)
    out = np.empty(xs.size, dtype=np.float64)
    for start in range(0, xs.size, _EVAL_CHUNK):
        chunk = xs[start:start + _EVAL_CHUNK]
        vals = np.exp(2j * np.pi * np.outer(chunk, k)) @ field.coeffs
        residue = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
        if residue > tol:
            raise ConjugateSymmetryError(
                f"imaginary residue {residue:.3e} exceeds tolerance {tol:.3e}; "
                "coefficients are not conjugate symmetric"
            )
        out[start:start + _EVAL_CHUNK] = vals.real
    return out


def evaluate(field: BandlimitedField, x):
    """Field value at x in [0, 1]; a scalar gives a float, an array an array."""
    xs = np.asarray(x, dtype=np.float64)
    if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
        raise ValueError("evaluation points must lie in [0, 1]")
    values = _evaluate_real(field, np.atleast_1d(xs).ravel())
    if xs.ndim == 0:
        return float(values[0])
    return values.reshape(xs.shape)


def grid_samples(field: BandlimitedField) -> GridSamples:
    """Field values at the 2b+1 grid points i/(2b+1)."""
    m = field.grid_size
    xs = np.arange(m) / m
    return GridSamples(b=field.b, values=_evaluate_real(field, xs))


def coefficients_from_grid(samples: GridSamples) -> BandlimitedField:
    """Recover the coefficients from the grid values.

    The evaluation matrix has orthogonal columns, so the inverse is a
    scaled conjugate transpose and no solver is needed.
    """
    m = 2 * samples.b + 1
    rows = np.arange(m)
    k = np.arange(-samples.b, samples.b + 1)
    phi = np.exp(2j * np.pi * np.outer(rows, k) / m)
    coeffs = phi.conj().T @ samples.values / m
    return BandlimitedField(b=samples.b, coeffs=coeffs)


def random_field(b, rng, amplitude_bound=1.0, distinct_gap=1e-6, max_retries=1000):
    """Draw a real-valued random field with i.i.d. uniform coefficient parts.

    a[0] is uniform on [-amplitude_bound, amplitude_bound]; for k >= 1
    the real and imaginary parts of a[k] are independent uniforms on the
    same interval and a[-k] is set to the conjugate.  Candidates whose
    grid values come closer than ``distinct_gap`` are rejected and
    redrawn, since downstream clustering relies on distinct values.
    """
    if b < 0:
        raise ValueError("bandwidth parameter must be nonnegative")
    if amplitude_bound < 0:
        raise ValueError("amplitude_bound must be nonnegative")
    for _ in range(max_retries):
        a0 = rng.uniform(-amplitude_bound, amplitude_bound)
        parts = rng.uniform(-amplitude_bound, amplitude_bound, size=(b, 2))
        coeffs = np.empty(2 * b + 1, dtype=np.complex128)
        coeffs[b] = a0
        if b:
            positive = parts[:, 0] + 1j * parts[:, 1]
            coeffs[b + 1:] = positive
            coeffs[:b] = np.conj(positive[::-1])
        field = BandlimitedField(b=b, coeffs=coeffs)
        values = np.sort(grid_samples(field).values)
        if values.size == 1 or float(np.min(np.diff(values))) >= distinct_gap:
            return field
    raise FieldGenerationError(
        f"no field with grid-value gaps >= {distinct_gap} in {max_retries} draws"
    )


def distortion(estimate: BandlimitedField, truth: BandlimitedField) -> float:
    """Relative squared L2 error of an estimate over one period.

    Computed in the coefficient domain, which is exact for bandlimited
    fields (the integral of |g|^2 equals the sum of squared coefficient
    magnitudes).
    """
    if estimate.b != truth.b:
        raise ValueError("fields must share the bandwidth parameter")
    energy = float(np.sum(np.abs(truth.coeffs) ** 2))
    if energy == 0.0:
        raise ValueError("reference field has zero energy")
    return float(np.sum(np.abs(estimate.coeffs - truth.coeffs) ** 2) / energy)


def level_set_profile(field, thetas, resolution=100_000):
    """Level-set measures for a whole vector of thresholds.

    Returns, for each theta, the fraction of a uniform grid of
    ``resolution`` points u in [0, 1) with g(u) <= theta.  The counting
    error is at most a couple of grid cells per level crossing.
    """
    if resolution < 1000:
        raise ValueError("resolution must be at least 1000")
    xs = np.arange(resolution) / resolution
    values = np.sort(_evaluate_real(field, xs))
    thetas = np.asarray(thetas, dtype=np.float64)
    counts = np.searchsorted(values, thetas, side="right")
    return counts / resolution


def level_set_measure(field, theta, resolution=100_000):
    """Measure of {u in [0,1] : g(u) <= theta} by uniform-grid counting."""
    return float(level_set_profile(field, [float(theta)], resolution)[0])


def shifted_field(field: BandlimitedField, shift: float) -> BandlimitedField:
    """The field x -> g(x - shift)."""
    k = np.arange(-field.b, field.b + 1)
    return BandlimitedField(
        b=field.b, coeffs=field.coeffs * np.exp(-2j * np.pi * k * shift)
    )


def flipped_field(field: BandlimitedField, shift: float = 0.0) -> BandlimitedField:
    """The field x -> g(shift - x)."""
    k = np.arange(-field.b, field.b + 1)
    return BandlimitedField(
        b=field.b, coeffs=field.coeffs[::-1] * np.exp(-2j * np.pi * k * shift)
    )


def effective_bandwidth(field: BandlimitedField, tol: float = 1e-12) -> int:
    """Largest |k| whose coefficient magnitude exceeds tol."""
    k = np.arange(-field.b, field.b + 1)
    big = np.abs(field.coeffs) > tol
    return int(np.max(np.abs(k[big]))) if np.any(big) else 0


def scaled_field(field: BandlimitedField, m: int, b_out=None) -> BandlimitedField:
    """The field x -> g(m x) for integer m >= 1.

    The output lives in a bandwidth-b_out container (default: the input's
    bandwidth), which must be able to hold frequency m times the input's
    effective bandwidth.
    """
    if m < 1:
        raise ValueError("scale factor must be a positive integer")
    bandwidth = effective_bandwidth(field)
    if b_out is None:
        b_out = field.b
    if m * bandwidth > b_out:
        raise ValueError(
            f"scale {m} pushes effective bandwidth {bandwidth} beyond {b_out}"
        )
    coeffs = np.zeros(2 * b_out + 1, dtype=np.complex128)
    for k in range(-bandwidth, bandwidth + 1):
        coeffs[b_out + m * k] = field.coeffs[field.b + k]
    return BandlimitedField(b=b_out, coeffs=coeffs)


def embedded_field(field: BandlimitedField, b_out: int) -> BandlimitedField:
    """The same field represented with a larger bandwidth parameter."""
    if b_out < field.b:
        raise ValueError("cannot embed into a smaller bandwidth")
    pad = b_out - field.b
    coeffs = np.zeros(2 * b_out + 1, dtype=np.complex128)
    coeffs[pad:pad + field.grid_size] = field.coeffs
    return BandlimitedField(b=b_out, coeffs=coeffs)


def field_to_json_dict(field: BandlimitedField) -> dict:
    """Flat JSON-friendly record: bandwidth plus (re, im) coefficient pairs."""
    return {
        "b": int(field.b),
        "coeffs": [[float(c.real), float(c.imag)] for c in field.coeffs],
    }


def field_from_json_dict(record: dict) -> BandlimitedField:
    coeffs = np.array(
        [complex(re, im) for re, im in record["coeffs"]], dtype=np.complex128
    )
    return BandlimitedField(b=int(record["b"]), coeffs=coeffs)
