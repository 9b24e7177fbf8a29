import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterinit.datagen import Dataset2D, GeneratorConfig, ShapeFamily, generate
from clusterinit.raster import (AffineMap, make_labels, rasterize, read_label_file,
                                read_pgm, save_frame, load_frame, to_data_space,
                                write_label_file, write_pgm)


def _tiny_dataset(points, labels=None, k_true=1):
    points = np.asarray(points, dtype=np.float64)
    if labels is None:
        labels = np.zeros(len(points), dtype=np.int64)
    return Dataset2D(points=points, labels=np.asarray(labels, dtype=np.int64),
                     centroids_true=np.zeros((k_true, 2)), k_true=k_true,
                     config=GeneratorConfig())


def test_single_point_normalizes_to_one_bin():
    frame = rasterize(_tiny_dataset([[5.0, 5.0]]), resolution=640)
    assert frame.grid.shape == (640, 640)
    assert (frame.grid > 0).sum() == 1
    assert frame.grid.max() == 1.0


def test_two_blob_histogram_matches_numpy(two_blob_dataset):
    frame = rasterize(two_blob_dataset, resolution=320)
    amap = frame.map
    # independent histogram of the same points
    px = two_blob_dataset.points[:, 0] * amap.scale_x + amap.offset_x
    py = two_blob_dataset.points[:, 1] * amap.scale_y + amap.offset_y
    cols = np.clip(np.floor(px).astype(int), 0, 319)
    rows = np.clip(np.floor(py).astype(int), 0, 319)
    expected, _, _ = np.histogram2d(rows, cols, bins=[np.arange(321), np.arange(321)])
    raw = frame.grid * expected.max()
    np.testing.assert_allclose(raw, expected, atol=1e-9)
    # mass preservation before normalization
    assert expected.sum() == two_blob_dataset.points.shape[0]


def test_paper_size_frame(four_blob_dataset):
    frame = rasterize(four_blob_dataset, resolution=640)
    assert frame.grid.shape == (640, 640)
    assert frame.grid.max() == 1.0
    assert frame.grid.min() >= 0.0


def test_degenerate_identical_points():
    frame = rasterize(_tiny_dataset([[3.0, 4.0]] * 10), resolution=64)
    assert frame.grid.max() == 1.0
    assert frame.total_points == 10


def test_labels_one_cluster_fills_frame(rng):
    pts = rng.uniform(0, 10, size=(5000, 2))
    ds = _tiny_dataset(pts)
    frame = rasterize(ds, resolution=640, margin_frac=0.05)
    labels = make_labels(ds, frame, coverage_quantile=0.995)
    assert len(labels) == 1
    box = labels[0]
    assert box.class_id == 0
    assert box.cx == pytest.approx(0.5, abs=0.02)
    assert box.cy == pytest.approx(0.5, abs=0.02)
    # 1/1.1 of the frame, inset by the 0.5% quantile tails
    assert box.w == pytest.approx(0.9, abs=0.03)
    assert box.h == pytest.approx(0.9, abs=0.03)
    # quantile box computed directly from the points
    amap = frame.map
    px = pts[:, 0] * amap.scale_x + amap.offset_x
    lo, hi = np.quantile(px, [0.005, 0.995])
    assert box.w * 640 == pytest.approx(hi - lo, rel=1e-9)


def test_labels_count_matches_k_true():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=12,
                                  n_total=24000, seed=13, variance_range=(1.0, 1.5)))
    frame = rasterize(ds)
    labels = make_labels(ds, frame)
    assert len(labels) == 12
    for box in labels:
        assert 0 < box.w <= 1 and 0 < box.h <= 1
        assert 0 <= box.cx - box.w / 2 + 1e-9 and box.cx + box.w / 2 <= 1 + 1e-9


def test_labels_no_structure_covers_frame():
    ds = generate(GeneratorConfig(shape_family=ShapeFamily.NO_STRUCTURE,
                                  n_total=5000, seed=3))
    frame = rasterize(ds)
    labels = make_labels(ds, frame)
    assert len(labels) == 1
    assert labels[0].w > 0.85 and labels[0].h > 0.85


def test_tiny_cluster_gets_one_pixel_box():
    ds = _tiny_dataset([[0.0, 0.0], [10.0, 10.0]], labels=[0, 1], k_true=2)
    frame = rasterize(ds, resolution=64)
    labels = make_labels(ds, frame)
    assert len(labels) == 2
    for box in labels:
        assert box.w * 64 >= 1.0 - 1e-9
        assert box.h * 64 >= 1.0 - 1e-9


def test_to_data_space_identity_map():
    amap = AffineMap(scale_x=1.0, scale_y=1.0, offset_x=0.0, offset_y=0.0,
                     width=100, height=100)
    assert to_data_space((10.0, 20.0), amap) == (10.0, 20.0)


def test_round_trip_origin(two_blob_dataset):
    frame = rasterize(two_blob_dataset)
    amap = frame.map
    px = amap.to_pixel(np.array([[0.0, 0.0]]))[0]
    back = to_data_space((px[0], px[1]), amap)
    assert abs(back[0]) < 1 / amap.scale_x + 1e-9
    assert abs(back[1]) < 1 / amap.scale_y + 1e-9


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-1e5, 1e5), y=st.floats(-1e5, 1e5),
       sx=st.floats(0.01, 100), sy=st.floats(0.01, 100),
       ox=st.floats(-1000, 1000), oy=st.floats(-1000, 1000))
def test_round_trip_property(x, y, sx, sy, ox, oy):
    amap = AffineMap(scale_x=sx, scale_y=sy, offset_x=ox, offset_y=oy,
                     width=640, height=640)
    px = amap.to_pixel(np.array([[x, y]]))
    back = amap.to_data(px)[0]
    assert abs(back[0] - x) <= 1 / sx + abs(x) * 1e-9
    assert abs(back[1] - y) <= 1 / sy + abs(y) * 1e-9


def test_pgm_roundtrip(tmp_path, four_blob_dataset):
    frame = rasterize(four_blob_dataset, resolution=128)
    path = tmp_path / "image.pgm"
    write_pgm(frame, path)
    data = path.read_bytes()
    assert data.startswith(b"P5\n128 128\n255\n")
    grid = read_pgm(path)
    assert grid.shape == (128, 128)
    np.testing.assert_allclose(grid, np.round(frame.grid * 255) / 255, atol=1e-12)


def test_label_file_roundtrip(tmp_path, four_blob_dataset):
    frame = rasterize(four_blob_dataset)
    labels = make_labels(four_blob_dataset, frame)
    path = tmp_path / "labels.txt"
    write_label_file(labels, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 4
    assert all(len(line.split()) == 5 for line in lines)
    assert all(line.startswith("0 ") for line in lines)
    loaded = read_label_file(path)
    for a, b in zip(loaded, labels):
        assert a.cx == pytest.approx(b.cx, abs=1e-6)
        assert a.w == pytest.approx(b.w, abs=1e-6)


def test_frame_dir_roundtrip(tmp_path, two_blob_dataset):
    frame = rasterize(two_blob_dataset, resolution=256)
    save_frame(frame, tmp_path / "f", make_labels(two_blob_dataset, frame))
    loaded = load_frame(tmp_path / "f")
    assert loaded.map == frame.map
    assert loaded.total_points == frame.total_points
    assert loaded.grid.shape == frame.grid.shape
    assert abs(loaded.grid - frame.grid).max() <= 0.5 / 255 + 1e-12
