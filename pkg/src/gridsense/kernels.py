"""Dispatch between the compiled kernels and the numpy fallback.

The compiled extension is optional.  Import order: if the environment
variable GRIDSENSE_PURE_PYTHON is set to 1 the fallback is forced;
otherwise _ckernels is used when the build produced it.  BACKEND records
which one won.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("GRIDSENSE_PURE_PYTHON") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def strict_ordering_violations(counts):
    """Count rows of a trials-by-locations matrix that violate the strict
    ordering 0 < c[0] < c[1] < ... < c[m-1]."""
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    if counts.ndim != 2:
        raise ValueError("counts must be a 2-D array")
    return _impl.strict_ordering_violations(counts)


def em_run(y, means0, weights0, sigma, tol, max_iter, degenerate_floor):
    """Run the fixed-variance mixture EM loop on the active backend."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    means0 = np.ascontiguousarray(means0, dtype=np.float64)
    weights0 = np.ascontiguousarray(weights0, dtype=np.float64)
    return _impl.em_run(
        y, means0, weights0, float(sigma), float(tol), int(max_iter),
        float(degenerate_floor),
    )
