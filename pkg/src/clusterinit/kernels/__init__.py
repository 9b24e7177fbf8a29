"""Hot-loop kernels: compiled extension when available, numpy fallback otherwise.

Set ``CLUSTERINIT_NO_EXT=1`` to force the numpy reference backend.
"""

import os

import numpy as np

from . import _reference

if os.environ.get("CLUSTERINIT_NO_EXT"):
    _impl = _reference
    BACKEND = "reference"
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _reference
        BACKEND = "reference"


def backend_name() -> str:
    return BACKEND


def _prep_points(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def assign_points(points, centroids):
    return _impl.assign_points(_prep_points(points), _prep_points(centroids))


def fcm_memberships(points, centroids, fuzzifier_m):
    return _impl.fcm_memberships(_prep_points(points), _prep_points(centroids),
                                 float(fuzzifier_m))


def label_distance_sums(points, labels, k):
    return _impl.label_distance_sums(_prep_points(points),
                                     np.ascontiguousarray(labels, dtype=np.int64),
                                     int(k))


def pair_extremes(points, labels):
    return _impl.pair_extremes(_prep_points(points),
                               np.ascontiguousarray(labels, dtype=np.int64))


def bin_counts(cols, rows, height, width):
    return _impl.bin_counts(np.ascontiguousarray(cols, dtype=np.int64),
                            np.ascontiguousarray(rows, dtype=np.int64),
                            int(height), int(width))
