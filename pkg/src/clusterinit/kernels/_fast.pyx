# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the clustering and rasterization hot paths.

Every function here has a numpy twin in ``_reference`` with the same
signature and semantics; ``tests/test_kernels.py`` holds them to 1e-12.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, pow, sqrt

cnp.import_array()


def assign_points(const double[:, ::1] points, const double[:, ::1] centroids):
    """Nearest-centroid assignment; ties go to the lowest centroid index.

    Returns (labels int64[n], squared_distance float64[n]).
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t k = centroids.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    d2_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] d2 = d2_arr
    cdef Py_ssize_t i, j, best_j
    cdef double dx, dy, dist, best

    for i in range(n):
        best = INFINITY
        best_j = 0
        for j in range(k):
            dx = points[i, 0] - centroids[j, 0]
            dy = points[i, 1] - centroids[j, 1]
            dist = dx * dx + dy * dy
            if dist < best:
                best = dist
                best_j = j
        labels[i] = best_j
        d2[i] = best
    return labels_arr, d2_arr


def fcm_memberships(const double[:, ::1] points, const double[:, ::1] centroids,
                    double fuzzifier_m):
    """Fuzzy c-means membership matrix U[n, k].

    u_ij = (d_ij^2)^(-1/(m-1)) / sum_l (d_lj^2)^(-1/(m-1)); a point
    coinciding with a centroid gets membership 1 there, 0 elsewhere.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t k = centroids.shape[0]
    u_arr = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] u = u_arr
    cdef Py_ssize_t i, j, zero_at
    cdef double dx, dy, d2, total, expo

    expo = 1.0 / (fuzzifier_m - 1.0)
    for i in range(n):
        zero_at = -1
        total = 0.0
        for j in range(k):
            dx = points[i, 0] - centroids[j, 0]
            dy = points[i, 1] - centroids[j, 1]
            d2 = dx * dx + dy * dy
            if d2 == 0.0:
                zero_at = j
                break
            u[i, j] = pow(d2, -expo)
            total += u[i, j]
        if zero_at >= 0:
            for j in range(k):
                u[i, j] = 0.0
            u[i, zero_at] = 1.0
        else:
            for j in range(k):
                u[i, j] /= total
    return u_arr


def label_distance_sums(const double[:, ::1] points, const long long[::1] labels,
                        Py_ssize_t k):
    """S[i, c] = sum of Euclidean distances from point i to every point of cluster c."""
    cdef Py_ssize_t n = points.shape[0]
    sums_arr = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] sums = sums_arr
    cdef Py_ssize_t i, j
    cdef double dx, dy, d

    for i in range(n):
        for j in range(i + 1, n):
            dx = points[i, 0] - points[j, 0]
            dy = points[i, 1] - points[j, 1]
            d = sqrt(dx * dx + dy * dy)
            sums[i, labels[j]] += d
            sums[j, labels[i]] += d
    return sums_arr


def pair_extremes(const double[:, ::1] points, const long long[::1] labels):
    """(min inter-cluster point distance, max intra-cluster point distance)."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t i, j
    cdef double dx, dy, d2
    cdef double min_inter = INFINITY
    cdef double max_intra = 0.0

    for i in range(n):
        for j in range(i + 1, n):
            dx = points[i, 0] - points[j, 0]
            dy = points[i, 1] - points[j, 1]
            d2 = dx * dx + dy * dy
            if labels[i] == labels[j]:
                if d2 > max_intra:
                    max_intra = d2
            else:
                if d2 < min_inter:
                    min_inter = d2
    return sqrt(min_inter) if min_inter != INFINITY else INFINITY, sqrt(max_intra)


def bin_counts(const long long[::1] cols, const long long[::1] rows,
               Py_ssize_t height, Py_ssize_t width):
    """Accumulate point counts into a height x width grid."""
    grid_arr = np.zeros((height, width), dtype=np.float64)
    cdef double[:, ::1] grid = grid_arr
    cdef Py_ssize_t i
    for i in range(cols.shape[0]):
        grid[rows[i], cols[i]] += 1.0
    return grid_arr
