import json

import numpy as np
import pytest

from clusterinit_trainer.corpus import (prepare_split, read_boxes, read_pgm,
                                        scan_corpus)


def test_scan_finds_all_pairs(smoke_corpus):
    items = scan_corpus(smoke_corpus)
    assert len(items) == 24
    for item in items:
        assert item.image_path.exists()
        assert item.label_path.exists()


def test_scan_rejects_missing_labels(tmp_path):
    d = tmp_path / "f"
    d.mkdir()
    (d / "image.pgm").write_bytes(b"P5\n1 1\n255\n\x00")
    with pytest.raises(FileNotFoundError, match="labels"):
        scan_corpus(tmp_path)


def test_scan_empty_dir(tmp_path):
    with pytest.raises(FileNotFoundError, match="no image/label pairs"):
        scan_corpus(tmp_path)


def test_read_pgm_and_boxes(smoke_corpus):
    items = scan_corpus(smoke_corpus)
    grid = read_pgm(items[0].image_path)
    assert grid.shape == (640, 640)
    assert 0.0 <= grid.min() and grid.max() <= 1.0
    boxes = read_boxes(items[0].label_path)
    assert boxes.shape[1] == 4
    assert (boxes > 0).all() and (boxes <= 1).all()


def test_split_sizes_and_determinism(smoke_corpus, tmp_path):
    a = prepare_split(smoke_corpus, 0.25, seed=3, out_path=tmp_path / "s.json")
    b = prepare_split(smoke_corpus, 0.25, seed=3)
    assert a["train"] == b["train"] and a["val"] == b["val"]
    assert len(a["val"]) == 6 and len(a["train"]) == 18
    on_disk = json.loads((tmp_path / "s.json").read_text())
    assert on_disk["val"] == a["val"]


def test_split_is_a_partition(smoke_corpus):
    manifest = prepare_split(smoke_corpus, 0.2, seed=9)
    train, val = set(manifest["train"]), set(manifest["val"])
    assert not train & val
    assert len(train | val) == 24


def test_split_different_seeds_differ(smoke_corpus):
    a = prepare_split(smoke_corpus, 0.2, seed=1)
    b = prepare_split(smoke_corpus, 0.2, seed=2)
    assert a["val"] != b["val"]


def test_split_bad_fraction(smoke_corpus):
    with pytest.raises(ValueError):
        prepare_split(smoke_corpus, 1.5, seed=0)
