"""Pure numpy reference implementations of the compiled kernels.

Used automatically when the extension is not built (or when
``CLUSTERINIT_NO_EXT`` is set); also the ground truth the compiled
kernels are tested against.
"""

import numpy as np

_CHUNK = 2048


def assign_points(points, centroids):
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        block = points[start:start + _CHUNK]
        # (b, k) squared distances
        dist = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels[start:start + _CHUNK] = np.argmin(dist, axis=1)
        d2[start:start + _CHUNK] = np.min(dist, axis=1)
    return labels, d2


def fcm_memberships(points, centroids, fuzzifier_m):
    expo = 1.0 / (fuzzifier_m - 1.0)
    n = points.shape[0]
    k = centroids.shape[0]
    u = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        block = points[start:start + _CHUNK]
        d2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        zero_rows, zero_cols = np.nonzero(d2 == 0.0)
        with np.errstate(divide="ignore"):
            inv = d2 ** -expo
        ub = inv / inv.sum(axis=1, keepdims=True)
        if zero_rows.size:
            # keep only the first zero per row, matching the scan order
            first = {}
            for r, c in zip(zero_rows, zero_cols):
                first.setdefault(r, c)
            for r, c in first.items():
                ub[r] = 0.0
                ub[r, c] = 1.0
        u[start:start + _CHUNK] = ub
    return u


def label_distance_sums(points, labels, k):
    n = points.shape[0]
    onehot = np.zeros((n, k), dtype=np.float64)
    onehot[np.arange(n), labels] = 1.0
    sums = np.zeros((n, k), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        block = points[start:start + _CHUNK]
        d = np.sqrt(((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
        sums[start:start + _CHUNK] = d @ onehot
    return sums


def pair_extremes(points, labels):
    n = points.shape[0]
    min_inter = np.inf
    max_intra = 0.0
    for start in range(0, n, _CHUNK):
        block = points[start:start + _CHUNK]
        blabels = labels[start:start + _CHUNK]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        same = blabels[:, None] == labels[None, :]
        # mask the diagonal of the global matrix
        rows = np.arange(start, start + block.shape[0])
        d2[np.arange(block.shape[0]), rows] = np.inf
        inter = np.where(same, np.inf, d2)
        intra = np.where(same, d2, -np.inf)
        intra[np.arange(block.shape[0]), rows] = -np.inf
        min_inter = min(min_inter, inter.min())
        max_intra = max(max_intra, intra.max())
    max_intra = max(max_intra, 0.0)
    return (np.sqrt(min_inter) if np.isfinite(min_inter) else np.inf,
            float(np.sqrt(max_intra)))


def bin_counts(cols, rows, height, width):
    flat = np.bincount(rows * width + cols, minlength=height * width)
    return flat.reshape(height, width).astype(np.float64)
