"""Rasterize 2D datasets into normalized density grids plus box labels.

The grid is a per-bin point count divided by its own maximum, so values
lie in [0, 1] and the pre-normalization bin sum equals the point count.
x and y are scaled independently: the padded data bounding box always
fills the full square image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .datagen import Dataset2D


@dataclass(frozen=True)
class AffineMap:
    """Data -> pixel transform: px = x * scale_x + offset_x (same for y)."""
    scale_x: float
    scale_y: float
    offset_x: float
    offset_y: float
    width: int
    height: int

    def to_pixel(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] * self.scale_x + self.offset_x
        out[:, 1] = pts[:, 1] * self.scale_y + self.offset_y
        return out

    def to_data(self, pixels: np.ndarray) -> np.ndarray:
        px = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
        out = np.empty_like(px)
        out[:, 0] = (px[:, 0] - self.offset_x) / self.scale_x
        out[:, 1] = (px[:, 1] - self.offset_y) / self.scale_y
        return out

    def to_json_dict(self) -> dict:
        return {"scale_x": self.scale_x, "scale_y": self.scale_y,
                "offset_x": self.offset_x, "offset_y": self.offset_y,
                "width": self.width, "height": self.height}

    @classmethod
    def from_json_dict(cls, d: dict) -> "AffineMap":
        return cls(scale_x=float(d["scale_x"]), scale_y=float(d["scale_y"]),
                   offset_x=float(d["offset_x"]), offset_y=float(d["offset_y"]),
                   width=int(d["width"]), height=int(d["height"]))


@dataclass
class RasterFrame:
    grid: np.ndarray  # (height, width), floats in [0, 1]
    map: AffineMap
    total_points: int


@dataclass(frozen=True)
class BoxLabel:
    """Single-class box, center/extent normalized to image dimensions."""
    class_id: int
    cx: float
    cy: float
    w: float
    h: float


def to_data_space(px: tuple[float, float], amap: AffineMap) -> tuple[float, float]:
    """Inverse of the rasterization transform for one pixel coordinate."""
    out = amap.to_data(np.array([px], dtype=np.float64))[0]
    return float(out[0]), float(out[1])


def _padded_bounds(values: np.ndarray, margin_frac: float) -> tuple[float, float]:
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo
    if span == 0.0:
        # degenerate axis: unit box centered on the value
        return lo - 0.5, hi + 0.5
    return lo - margin_frac * span, hi + margin_frac * span


def rasterize(ds: Dataset2D, resolution: int = 640, margin_frac: float = 0.05) -> RasterFrame:
    """Bin points into a resolution x resolution grid, normalized by its max."""
    pts = ds.points
    if pts.shape[0] == 0:
        raise ValueError("empty dataset")
    x_lo, x_hi = _padded_bounds(pts[:, 0], margin_frac)
    y_lo, y_hi = _padded_bounds(pts[:, 1], margin_frac)
    scale_x = resolution / (x_hi - x_lo)
    scale_y = resolution / (y_hi - y_lo)
    amap = AffineMap(scale_x=scale_x, scale_y=scale_y,
                     offset_x=-x_lo * scale_x, offset_y=-y_lo * scale_y,
                     width=resolution, height=resolution)
    px = amap.to_pixel(pts)
    cols = np.clip(np.floor(px[:, 0]).astype(np.int64), 0, resolution - 1)
    rows = np.clip(np.floor(px[:, 1]).astype(np.int64), 0, resolution - 1)
    grid = kernels.bin_counts(cols, rows, resolution, resolution)
    peak = grid.max()
    if peak > 0:
        grid /= peak
    return RasterFrame(grid=grid, map=amap, total_points=pts.shape[0])


def make_labels(ds: Dataset2D, frame: RasterFrame, coverage_quantile: float = 0.995) -> list[BoxLabel]:
    """One box per true cluster spanning its per-axis quantile range."""
    amap = frame.map
    w_img, h_img = amap.width, amap.height
    labels_out = []
    for cluster in range(ds.k_true):
        member_px = amap.to_pixel(ds.points[ds.labels == cluster])
        if member_px.shape[0] >= 2:
            q = [1.0 - coverage_quantile, coverage_quantile]
            x_lo, x_hi = np.quantile(member_px[:, 0], q)
            y_lo, y_hi = np.quantile(member_px[:, 1], q)
        else:
            x_lo = x_hi = float(member_px[0, 0])
            y_lo = y_hi = float(member_px[0, 1])
        # clamp to the image, keep at least one pixel of extent
        x_lo, x_hi = max(x_lo, 0.0), min(x_hi, float(w_img))
        y_lo, y_hi = max(y_lo, 0.0), min(y_hi, float(h_img))
        x_hi = min(max(x_hi, x_lo + 1.0), float(w_img))
        y_hi = min(max(y_hi, y_lo + 1.0), float(h_img))
        x_lo = min(x_lo, x_hi - 1.0)
        y_lo = min(y_lo, y_hi - 1.0)
        labels_out.append(BoxLabel(
            class_id=0,
            cx=(x_lo + x_hi) / 2 / w_img,
            cy=(y_lo + y_hi) / 2 / h_img,
            w=(x_hi - x_lo) / w_img,
            h=(y_hi - y_lo) / h_img,
        ))
    return labels_out


# ---------------------------------------------------------------------------
# File formats: 8-bit binary PGM image, space-separated label lines,
# frame.json carrying the affine map.


def write_pgm(frame: RasterFrame, path: str | Path) -> None:
    grid8 = np.round(frame.grid * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{frame.map.width} {frame.map.height}\n255\n".encode("ascii"))
        fh.write(grid8.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary (P5) PGM back into a float grid in [0, 1]."""
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
        raise ValueError(f"not a binary PGM: magic {fields[0]!r}")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return raw.reshape(height, width).astype(np.float64) / maxval


def write_label_file(labels: list[BoxLabel], path: str | Path) -> None:
    with open(path, "w") as fh:
        for b in labels:
            fh.write(f"{b.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}\n")


def read_label_file(path: str | Path) -> list[BoxLabel]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        cid, cx, cy, w, h = line.split()
        out.append(BoxLabel(class_id=int(cid), cx=float(cx), cy=float(cy),
                            w=float(w), h=float(h)))
    return out


def save_frame(frame: RasterFrame, directory: str | Path,
               labels: list[BoxLabel] | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_pgm(frame, directory / "image.pgm")
    meta = {"map": frame.map.to_json_dict(), "total_points": frame.total_points}
    with open(directory / "frame.json", "w") as fh:
        json.dump(meta, fh, indent=2)
    if labels is not None:
        write_label_file(labels, directory / "labels.txt")
    return directory


def load_frame(directory: str | Path) -> RasterFrame:
    directory = Path(directory)
    with open(directory / "frame.json") as fh:
        meta = json.load(fh)
    grid = read_pgm(directory / "image.pgm")
    return RasterFrame(grid=grid, map=AffineMap.from_json_dict(meta["map"]),
                       total_points=int(meta["total_points"]))
