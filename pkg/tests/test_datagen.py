import numpy as np
import pytest

from clusterinit.datagen import (Balance, GeneratorConfig, ShapeFamily, SuiteSpec,
                                 config_for_suite_index, generate, generate_suite,
                                 load_dataset, save_dataset)
from clusterinit.errors import InfeasibleSeparationError, InvalidConfigError


def test_no_structure_degenerate_family():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.NO_STRUCTURE,
                                  n_total=100, seed=7))
    assert ds.k_true == 1
    assert ds.points.shape == (100, 2)
    assert (ds.labels == 0).all()


def test_two_equal_blobs_counts_and_means():
    config = GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=2,
                             n_total=20000, seed=1, separation_min=8.0,
                             balance=Balance.EQUAL, variance_range=(1.0, 2.0))
    ds = generate(config)
    counts = np.bincount(ds.labels)
    assert counts.tolist() == [10000, 10000]
    # per-label mean recomputed from the points must sit near the true centroid
    sigma_hi = config.variance_range[1]
    for i in range(2):
        mean = ds.points[ds.labels == i].mean(axis=0)
        assert np.linalg.norm(mean - ds.centroids_true[i]) < 0.5 * sigma_hi


def test_paper_scale_upper_bounds():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=12,
                                  n_total=50000, seed=3, variance_range=(1.0, 1.8)))
    assert ds.k_true == 12
    assert len(np.unique(ds.labels)) == 12
    assert ds.points.shape == (50000, 2)


def test_determinism_bitwise():
    config = GeneratorConfig(shape_family=ShapeFamily.VARIED_VARIANCE_BLOBS, k=5,
                             n_total=3000, seed=99,
                             balance=Balance.RANDOM_PROPORTIONS)
    a = generate(config)
    b = generate(config)
    assert (a.points == b.points).all()
    assert (a.labels == b.labels).all()
    assert (a.centroids_true == b.centroids_true).all()


def test_equal_balance_counts_within_one():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=7,
                                  n_total=1000, seed=2))
    counts = np.bincount(ds.labels, minlength=7)
    assert counts.max() - counts.min() <= 1


def test_random_proportions_every_label_present():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=9,
                                  n_total=500, seed=4,
                                  balance=Balance.RANDOM_PROPORTIONS))
    assert len(np.unique(ds.labels)) == 9
    assert np.bincount(ds.labels).sum() == 500


def test_separation_invariant_varied_variance():
    config = GeneratorConfig(shape_family=ShapeFamily.VARIED_VARIANCE_BLOBS, k=6,
                             n_total=600, seed=11, separation_min=6.0,
                             variance_range=(0.5, 2.0))
    ds = generate(config)
    rng = np.random.default_rng(config.seed)
    sigmas = rng.uniform(*config.variance_range, size=6)
    c = ds.centroids_true
    for i in range(6):
        for j in range(i + 1, 6):
            d = np.linalg.norm(c[i] - c[j])
            assert d >= config.separation_min * max(sigmas[i], sigmas[j]) - 1e-9


def test_moons_and_circles_two_components():
    for family in (ShapeFamily.NOISY_MOONS, ShapeFamily.NOISY_CIRCLES):
        ds = generate(GeneratorConfig(shape_family=family, n_total=1000,
                                      noise_level=0.05, seed=8))
        assert ds.k_true == 2
        assert set(np.unique(ds.labels)) == {0, 1}
        for i in range(2):
            np.testing.assert_allclose(ds.centroids_true[i],
                                       ds.points[ds.labels == i].mean(axis=0))


def test_circles_radius_ratio():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.NOISY_CIRCLES,
                                  n_total=4000, noise_level=0.0, seed=8))
    r0 = np.linalg.norm(ds.points[ds.labels == 0], axis=1).mean()
    r1 = np.linalg.norm(ds.points[ds.labels == 1], axis=1).mean()
    assert r1 / r0 == pytest.approx(0.5, rel=1e-2)


def test_anisotropic_determinant_and_centroids():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.ANISOTROPIC, k=3,
                                  n_total=9000, seed=21, variance_range=(1.0, 1.5),
                                  separation_min=10.0))
    assert ds.k_true == 3
    for i in range(3):
        mean = ds.points[ds.labels == i].mean(axis=0)
        assert np.linalg.norm(mean - ds.centroids_true[i]) < 1.0


def test_invalid_configs_raise():
    with pytest.raises(InvalidConfigError, match="invalid config"):
        generate(GeneratorConfig(k=0, n_total=10))
    with pytest.raises(InvalidConfigError, match="invalid config"):
        generate(GeneratorConfig(k=5, n_total=3))
    with pytest.raises(InvalidConfigError, match="invalid config"):
        generate(GeneratorConfig(k=13, n_total=100))
    with pytest.raises(InvalidConfigError, match="invalid config"):
        generate(GeneratorConfig(k=3, n_total=100, variance_range=(2.0, 1.0)))


def test_infeasible_separation_raises():
    config = GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=12,
                             n_total=120, seed=1, variance_range=(30.0, 30.0),
                             separation_min=12.0)
    with pytest.raises(InfeasibleSeparationError, match="infeasible separation"):
        generate(config)


def test_suite_reproducible_and_order_independent():
    suite = generate_suite(100, master_seed=9, spec=SuiteSpec(n_range=(50, 80)))
    lone = generate(config_for_suite_index(9, 57, SuiteSpec(n_range=(50, 80))))
    assert (suite[57].points == lone.points).all()
    assert (suite[57].labels == lone.labels).all()
    again = generate_suite(1, master_seed=0, spec=SuiteSpec(n_range=(50, 80)))
    once_more = generate_suite(1, master_seed=0, spec=SuiteSpec(n_range=(50, 80)))
    assert (again[0].points == once_more[0].points).all()


def test_suite_covers_every_k():
    spec = SuiteSpec(n_range=(24, 48),
                     family_mix={f: 1.0 for f in (ShapeFamily.GAUSSIAN_BLOBS,
                                                  ShapeFamily.VARIED_VARIANCE_BLOBS,
                                                  ShapeFamily.ANISOTROPIC)})
    suite = generate_suite(200, master_seed=42, spec=spec)
    seen = {ds.k_true for ds in suite}
    assert set(range(2, 13)) <= seen


def test_dataset_roundtrip(tmp_path):
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=3,
                                  n_total=200, seed=6))
    ds.dataset_id = "ds_0000"
    save_dataset(ds, tmp_path / "ds_0000")
    loaded = load_dataset(tmp_path / "ds_0000")
    assert (loaded.points == ds.points).all()
    assert (loaded.labels == ds.labels).all()
    assert loaded.k_true == ds.k_true
    assert loaded.config == ds.config
