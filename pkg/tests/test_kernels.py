"""Compiled and reference kernels must agree; slow-but-obvious loops check both."""

import numpy as np
import pytest

from clusterinit.kernels import _reference
from clusterinit import kernels


def _naive_assign(points, centroids):
    labels = np.empty(len(points), dtype=np.int64)
    d2 = np.empty(len(points))
    for i, p in enumerate(points):
        dists = [float(((p - c) ** 2).sum()) for c in centroids]
        labels[i] = int(np.argmin(dists))
        d2[i] = min(dists)
    return labels, d2


@pytest.fixture
def cloud(rng):
    points = rng.normal(size=(300, 2)) * 3
    centroids = rng.normal(size=(5, 2)) * 2
    labels = rng.integers(0, 5, size=300)
    return points, centroids, labels.astype(np.int64)


def test_assign_matches_reference_and_naive(cloud):
    points, centroids, _ = cloud
    l_active, d_active = kernels.assign_points(points, centroids)
    l_ref, d_ref = _reference.assign_points(points, centroids)
    l_naive, d_naive = _naive_assign(points, centroids)
    assert (l_active == l_ref).all() and (l_active == l_naive).all()
    np.testing.assert_allclose(d_active, d_ref, rtol=1e-12)
    np.testing.assert_allclose(d_active, d_naive, rtol=1e-12)


def test_assign_tie_goes_to_lower_index():
    points = np.array([[0.0, 0.0]])
    centroids = np.array([[1.0, 0.0], [-1.0, 0.0]])
    labels, _ = kernels.assign_points(points, centroids)
    assert labels[0] == 0


def test_fcm_memberships_match_and_sum_to_one(cloud):
    points, centroids, _ = cloud
    u_active = kernels.fcm_memberships(points, centroids, 2.0)
    u_ref = _reference.fcm_memberships(points, centroids, 2.0)
    np.testing.assert_allclose(u_active, u_ref, rtol=1e-12)
    np.testing.assert_allclose(u_active.sum(axis=1), 1.0, rtol=1e-12)


def test_fcm_membership_formula_literal(cloud):
    # literal ratio form: u_ij = 1 / sum_l (d_ij / d_lj)^(2/(m-1))
    points, centroids, _ = cloud
    m = 2.4
    u = kernels.fcm_memberships(points, centroids, m)
    for j in [0, 17, 123]:
        d = np.sqrt(((centroids - points[j]) ** 2).sum(axis=1))
        for i in range(len(centroids)):
            expected = 1.0 / ((d[i] / d) ** (2 / (m - 1))).sum()
            assert u[j, i] == pytest.approx(expected, rel=1e-9)


def test_fcm_membership_coincident_point_is_one_hot(cloud):
    points, centroids, _ = cloud
    points = points.copy()
    points[3] = centroids[2]
    u = kernels.fcm_memberships(points, centroids, 2.0)
    expected = np.zeros(len(centroids))
    expected[2] = 1.0
    np.testing.assert_array_equal(u[3], expected)


def test_label_distance_sums_match(cloud):
    points, _, labels = cloud
    s_active = kernels.label_distance_sums(points, labels, 5)
    s_ref = _reference.label_distance_sums(points, labels, 5)
    np.testing.assert_allclose(s_active, s_ref, rtol=1e-10, atol=1e-12)
    # naive spot check
    i = 42
    for c in range(5):
        expected = sum(np.sqrt(((points[i] - points[j]) ** 2).sum())
                       for j in range(len(points)) if labels[j] == c)
        assert s_active[i, c] == pytest.approx(expected, rel=1e-9)


def test_pair_extremes_match(cloud):
    points, _, labels = cloud
    got_active = kernels.pair_extremes(points, labels)
    got_ref = _reference.pair_extremes(points, labels)
    assert got_active == pytest.approx(got_ref, rel=1e-12)
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(d, np.nan)
    inter = np.nanmin(np.where(same, np.nan, d))
    intra = np.nanmax(np.where(same, d, np.nan))
    assert got_active[0] == pytest.approx(inter, rel=1e-12)
    assert got_active[1] == pytest.approx(intra, rel=1e-12)


def test_bin_counts_match(rng):
    cols = rng.integers(0, 64, size=5000)
    rows = rng.integers(0, 48, size=5000)
    g_active = kernels.bin_counts(cols, rows, 48, 64)
    g_ref = _reference.bin_counts(cols, rows, 48, 64)
    np.testing.assert_array_equal(g_active, g_ref)
    assert g_active.sum() == 5000
