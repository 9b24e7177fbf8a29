import numpy as np
import pytest

import oracles
from clusterinit.clustering import InitSpec, kmeans
from clusterinit.errors import (DegenerateDataError, IndexUndefinedError,
                                SweepFailedError)
from clusterinit.indices import (IndexKind, SelectionRule, default_sweep_clusterer,
                                 estimate_k, gap_statistic, parse_index_kinds, score)

NAIVE = {
    IndexKind.BIC: oracles.naive_bic,
    IndexKind.AIC: oracles.naive_aic,
    IndexKind.DUNN: oracles.naive_dunn,
    IndexKind.DAVIES_BOULDIN: oracles.naive_davies_bouldin,
    IndexKind.SILHOUETTE: oracles.naive_silhouette,
    IndexKind.CALINSKI_HARABASZ: oracles.naive_calinski_harabasz,
}


def _random_partition(seed, n=60, k=3):
    rng = np.random.default_rng(seed)
    points = rng.normal(size=(n, 2)) * rng.uniform(0.5, 4)
    result = kmeans(points, InitSpec.plusplus(k, seed))
    return points, result.assignments, result.centroids


def test_selection_rules_assignment():
    assert IndexKind.BIC.selection_rule is SelectionRule.MINIMIZE
    assert IndexKind.AIC.selection_rule is SelectionRule.MINIMIZE
    assert IndexKind.DUNN.selection_rule is SelectionRule.MAXIMIZE
    assert IndexKind.DAVIES_BOULDIN.selection_rule is SelectionRule.MINIMIZE
    assert IndexKind.SILHOUETTE.selection_rule is SelectionRule.MAXIMIZE
    assert IndexKind.CALINSKI_HARABASZ.selection_rule is SelectionRule.MAXIMIZE
    assert IndexKind.GAP_STATISTIC.selection_rule is SelectionRule.GAP_RULE


@pytest.mark.parametrize("kind", list(NAIVE))
def test_oracle_equivalence_single_instance(kind):
    points, labels, centroids = _random_partition(7, n=30, k=3)
    got = score(kind, points, labels, centroids)
    expected = NAIVE[kind](points.tolist(), labels.tolist(), centroids.tolist())
    assert got == pytest.approx(expected, rel=1e-9)


def test_silhouette_two_singletons_zero():
    points = np.array([[0.0, 0.0], [5.0, 0.0]])
    labels = np.array([0, 1])
    centroids = points.copy()
    assert score(IndexKind.SILHOUETTE, points, labels, centroids) == 0.0


def test_tight_far_blobs_limits(rng):
    a = rng.normal(scale=1e-4, size=(40, 2))
    b = rng.normal(scale=1e-4, size=(40, 2)) + [100.0, 0.0]
    points = np.vstack([a, b])
    labels = np.repeat([0, 1], 40)
    centroids = np.array([a.mean(axis=0), b.mean(axis=0)])
    assert score(IndexKind.SILHOUETTE, points, labels, centroids) == pytest.approx(1.0, abs=1e-4)
    assert score(IndexKind.DAVIES_BOULDIN, points, labels, centroids) == pytest.approx(0.0, abs=1e-4)


def test_silhouette_range_and_rigid_motion(rng):
    points, labels, centroids = _random_partition(13, n=80, k=4)
    sw = score(IndexKind.SILHOUETTE, points, labels, centroids)
    assert -1.0 <= sw <= 1.0
    theta = 0.7
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    moved = points @ rot.T + [13.0, -4.0]
    moved_cents = centroids @ rot.T + [13.0, -4.0]
    for kind in (IndexKind.DUNN, IndexKind.DAVIES_BOULDIN, IndexKind.SILHOUETTE,
                 IndexKind.CALINSKI_HARABASZ):
        v0 = score(kind, points, labels, centroids)
        v1 = score(kind, moved, labels, moved_cents)
        assert v1 == pytest.approx(v0, rel=1e-9)


def test_nonnegativity(rng):
    points, labels, centroids = _random_partition(17, n=50, k=3)
    for kind in (IndexKind.DUNN, IndexKind.DAVIES_BOULDIN, IndexKind.CALINSKI_HARABASZ):
        assert score(kind, points, labels, centroids) >= 0


def test_k1_undefined_for_pairwise_indices():
    points = np.random.default_rng(0).normal(size=(20, 2))
    labels = np.zeros(20, dtype=np.int64)
    centroids = points.mean(axis=0, keepdims=True)
    for kind in (IndexKind.DUNN, IndexKind.DAVIES_BOULDIN, IndexKind.SILHOUETTE,
                 IndexKind.CALINSKI_HARABASZ):
        with pytest.raises(IndexUndefinedError, match="index undefined for k"):
            score(kind, points, labels, centroids)
    # BIC/AIC are defined at k=1
    assert np.isfinite(score(IndexKind.BIC, points, labels, centroids))
    assert np.isfinite(score(IndexKind.AIC, points, labels, centroids))


class TestGap:
    def test_uniform_data_gap_near_zero(self):
        rng = np.random.default_rng(3)
        points = rng.uniform(0, 10, size=(400, 2))
        gap, se = gap_statistic(points, k=1, seed=5)
        assert abs(gap) <= 3 * se + 1e-12

    def test_three_blobs_selected(self):
        rng = np.random.default_rng(11)
        centers = np.array([[0, 0], [20, 0], [0, 20]])
        points = np.vstack([c + rng.normal(scale=1.0, size=(100, 2)) for c in centers])
        report = estimate_k(points, IndexKind.GAP_STATISTIC, k_max=6, seed=2)
        assert report.k_selected == 3

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        points = rng.normal(size=(120, 2))
        assert gap_statistic(points, 2, seed=9) == gap_statistic(points, 2, seed=9)

    def test_matches_naive(self):
        rng = np.random.default_rng(21)
        points = rng.normal(size=(60, 2))
        got = gap_statistic(points, 2, default_sweep_clusterer, b_refs=5, seed=31)
        expected = oracles.naive_gap(points, 2, default_sweep_clusterer, 5, 31)
        assert got[0] == pytest.approx(expected[0], rel=1e-9)
        assert got[1] == pytest.approx(expected[1], rel=1e-9, abs=1e-12)

    def test_degenerate_dispersion(self):
        points = np.zeros((10, 2))
        with pytest.raises(DegenerateDataError, match="degenerate dispersion"):
            gap_statistic(points, 1, seed=0)


class TestEstimateK:
    def test_ch_recovers_five_blobs(self):
        rng = np.random.default_rng(55)
        centers = rng.uniform(0, 100, size=(5, 2))
        while True:
            d = np.sqrt(((centers[:, None] - centers[None]) ** 2).sum(-1))
            np.fill_diagonal(d, np.inf)
            if d.min() > 25:
                break
            centers = rng.uniform(0, 100, size=(5, 2))
        points = np.vstack([c + rng.normal(scale=1.5, size=(150, 2)) for c in centers])
        report = estimate_k(points, IndexKind.CALINSKI_HARABASZ, k_max=12, seed=1)
        assert report.k_selected == 5
        assert set(report.values) == set(range(2, 13))

    def test_k_max_two(self, two_blob_dataset):
        points = two_blob_dataset.points[:500]
        report = estimate_k(points, IndexKind.SILHOUETTE, k_max=2, seed=3)
        assert report.k_selected == 2
        assert list(report.values) == [2]

    def test_selection_consistent_with_rule(self):
        rng = np.random.default_rng(8)
        points = rng.normal(size=(100, 2))
        for kind in (IndexKind.BIC, IndexKind.DAVIES_BOULDIN):
            report = estimate_k(points, kind, k_max=5, seed=4)
            assert report.k_selected == min(report.values, key=lambda k: (report.values[k], k))
        for kind in (IndexKind.SILHOUETTE, IndexKind.CALINSKI_HARABASZ):
            report = estimate_k(points, kind, k_max=5, seed=4)
            assert report.k_selected == min(report.values, key=lambda k: (-report.values[k], k))

    def test_elapsed_grows_with_n(self):
        rng = np.random.default_rng(12)
        small = rng.normal(size=(10000, 2)) * 3
        big = rng.normal(size=(40000, 2)) * 3
        r_small = estimate_k(small, IndexKind.BIC, k_max=6, seed=1)
        r_big = estimate_k(big, IndexKind.BIC, k_max=6, seed=1)
        assert r_big.elapsed_seconds > r_small.elapsed_seconds

    def test_sweep_failure(self):
        points = np.zeros((10, 2))  # zero variance everywhere
        with pytest.raises(SweepFailedError, match="sweep failed"):
            estimate_k(points, IndexKind.CALINSKI_HARABASZ, k_max=3, seed=0)

    def test_report_json_schema(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(80, 2))
        report = estimate_k(points, IndexKind.AIC, k_max=4, seed=6)
        d = report.to_json_dict()
        assert set(d) == {"kind", "values", "k_selected", "elapsed_seconds"}
        assert d["kind"] == "aic"
        assert all(isinstance(key, str) for key in d["values"])


def test_parse_index_kinds():
    assert parse_index_kinds("bic, aic,ch") == [IndexKind.BIC, IndexKind.AIC,
                                                IndexKind.CALINSKI_HARABASZ]
    with pytest.raises(ValueError, match="unknown index"):
        parse_index_kinds("bogus")
