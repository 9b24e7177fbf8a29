"""Corpus loading: PGM frames, box label files, deterministic splits."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def read_pgm(path: str | Path) -> np.ndarray:
    """Binary (P5) PGM to a float grid in [0, 1]."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM: {fields[0]!r}")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return raw.reshape(height, width).astype(np.float32) / maxval


def read_boxes(path: str | Path) -> np.ndarray:
    """Label file lines `class_id cx cy w h` to an (n, 4) array of cx cy w h."""
    rows = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if len(parts) == 5:
            rows.append([float(v) for v in parts[1:]])
    return np.array(rows, dtype=np.float32).reshape(-1, 4)


@dataclass
class CorpusItem:
    frame_dir: Path
    image_path: Path
    label_path: Path


def scan_corpus(data_dir: str | Path) -> list[CorpusItem]:
    """Find frame directories holding an image and its label file."""
    root = Path(data_dir)
    items = []
    candidates = [root] + sorted(p for p in root.iterdir() if p.is_dir())
    for d in candidates:
        image = d / "image.pgm"
        labels = d / "labels.txt"
        if image.exists():
            if not labels.exists():
                raise FileNotFoundError(f"{image} has no labels.txt beside it")
            items.append(CorpusItem(frame_dir=d, image_path=image, label_path=labels))
    if not items:
        raise FileNotFoundError(f"no image/label pairs under {root}")
    return items


def prepare_split(data_dir: str | Path, val_fraction: float, seed: int,
                  out_path: str | Path | None = None) -> dict:
    """Deterministic train/val split manifest; no item appears twice."""
    if not 0 < val_fraction < 1:
        raise ValueError("val_fraction must be in (0, 1)")
    items = scan_corpus(data_dir)
    names = [item.frame_dir.name for item in items]
    order = np.random.default_rng(seed).permutation(len(names))
    n_val = max(1, int(round(val_fraction * len(names))))
    if n_val >= len(names):
        n_val = len(names) - 1
    val_idx = sorted(order[:n_val].tolist())
    train_idx = sorted(order[n_val:].tolist())
    manifest = {
        "data_dir": str(Path(data_dir).resolve()),
        "seed": int(seed),
        "val_fraction": float(val_fraction),
        "train": [names[i] for i in train_idx],
        "val": [names[i] for i in val_idx],
    }
    if out_path is not None:
        with open(out_path, "w") as fh:
            json.dump(manifest, fh, indent=2)
    return manifest


def load_arrays(items: list[CorpusItem], image_size: int):
    """Stack images resized to image_size with their box lists."""
    import torch
    import torch.nn.functional as functional

    images = []
    boxes = []
    for item in items:
        grid = torch.from_numpy(read_pgm(item.image_path))[None, None]
        if grid.shape[-1] != image_size:
            grid = functional.interpolate(grid, size=(image_size, image_size),
                                          mode="bilinear", align_corners=False)
        images.append(grid[0])
        boxes.append(read_boxes(item.label_path))
    return torch.stack(images), boxes
