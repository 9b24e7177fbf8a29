"""Cluster-region detection backends and box-to-initialization conversion.

Two interchangeable backends produce pixel-space boxes from a density
frame: a deterministic density-blob detector (smooth, threshold, label
connected components) and a trained-model backend executing a portable
model file. Boxes become data-space initialization parameters through
the frame's affine map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .artifact import ModelArtifact, bilinear_resize
from .raster import RasterFrame, to_data_space

_EIGHT_CONNECTED = np.ones((3, 3), dtype=np.int32)


@dataclass(frozen=True)
class DetectionBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float

    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2

    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def to_json_dict(self) -> dict:
        return {"x_min": self.x_min, "y_min": self.y_min,
                "x_max": self.x_max, "y_max": self.y_max,
                "confidence": self.confidence}


@dataclass(frozen=True)
class DetectorSettings:
    confidence_threshold: float = 0.25
    nms_iou_threshold: float = 0.45
    smoothing_sigma_px: float = 3.0
    density_threshold_frac: float = 0.08
    min_box_area_px: int = 25

    def __post_init__(self):
        if not 0 <= self.confidence_threshold <= 1:
            raise ValueError("confidence_threshold outside [0, 1]")
        if not 0 < self.nms_iou_threshold < 1:
            raise ValueError("nms_iou_threshold outside (0, 1)")
        if self.smoothing_sigma_px < 0:
            raise ValueError("smoothing_sigma_px negative")
        if not 0 < self.density_threshold_frac < 1:
            raise ValueError("density_threshold_frac outside (0, 1)")
        if self.min_box_area_px < 1:
            raise ValueError("min_box_area_px < 1")


@dataclass
class InitParams:
    """Estimated clustering initialization: k, data-space centroids, sizes."""
    k: int
    centroids: np.ndarray       # (k, 2) data space
    size_estimates: np.ndarray  # (k,) estimated member counts
    confidences: np.ndarray     # (k,) detector confidences

    def to_json_dict(self, boxes: list[DetectionBox] | None = None) -> dict:
        out = {
            "k": int(self.k),
            "boxes": [b.to_json_dict() for b in boxes] if boxes is not None else [],
            "centroids_data_space": [[float(x), float(y)] for x, y in self.centroids],
            "size_estimates": [float(s) for s in self.size_estimates],
            "confidences": [float(c) for c in self.confidences],
        }
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "InitParams":
        k = int(d["k"])
        return cls(
            k=k,
            centroids=np.array(d["centroids_data_space"], dtype=np.float64).reshape(k, 2),
            size_estimates=np.array(d["size_estimates"], dtype=np.float64),
            confidences=np.array(d.get("confidences", [1.0] * k), dtype=np.float64),
        )


def iou(a: DetectionBox, b: DetectionBox) -> float:
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    return inter / (a.area() + b.area() - inter)


def nms(boxes: list[DetectionBox], iou_threshold: float) -> list[DetectionBox]:
    """Greedy non-max suppression, ties broken by smaller x_min then y_min."""
    pending = sorted(boxes, key=lambda b: (-b.confidence, b.x_min, b.y_min))
    kept: list[DetectionBox] = []
    while pending:
        best = pending.pop(0)
        kept.append(best)
        pending = [b for b in pending if iou(best, b) <= iou_threshold]
    return kept


def density_blob_detect(frame: RasterFrame, settings: DetectorSettings | None = None) -> list[DetectionBox]:
    """Smooth the density grid, threshold, and box each connected component."""
    settings = settings or DetectorSettings()
    grid = frame.grid
    if grid.max() <= 0.0:
        return []
    if settings.smoothing_sigma_px > 0:
        smoothed = ndimage.gaussian_filter(grid, sigma=settings.smoothing_sigma_px,
                                           truncate=3.0)
    else:
        smoothed = grid
    peak = smoothed.max()
    mask = smoothed > settings.density_threshold_frac * peak
    labeled, n_components = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    boxes = []
    for index, slc in enumerate(ndimage.find_objects(labeled), start=1):
        if slc is None:
            continue
        rows, cols = slc
        box = DetectionBox(
            x_min=float(cols.start), y_min=float(rows.start),
            x_max=float(cols.stop), y_max=float(rows.stop),
            confidence=float(smoothed[labeled == index].mean() / peak),
        )
        if box.area() >= settings.min_box_area_px:
            boxes.append(box)
    return nms(boxes, settings.nms_iou_threshold)


def model_detect(frame: RasterFrame, model: ModelArtifact,
                 settings: DetectorSettings | None = None) -> list[DetectionBox]:
    """Run a portable model file on the frame and decode its detections."""
    settings = settings or DetectorSettings()
    size = model.input_size
    grid = bilinear_resize(frame.grid, size, size)
    image = np.broadcast_to(grid, (model.input_channels, size, size)).copy()
    raw_boxes, confidences = model.predict_boxes(image)
    keep = confidences >= settings.confidence_threshold
    sx = frame.map.width / size
    sy = frame.map.height / size
    boxes = []
    for (x0, y0, x1, y1), conf in zip(raw_boxes[keep], confidences[keep]):
        b = DetectionBox(
            x_min=float(np.clip(x0 * sx, 0, frame.map.width)),
            y_min=float(np.clip(y0 * sy, 0, frame.map.height)),
            x_max=float(np.clip(x1 * sx, 0, frame.map.width)),
            y_max=float(np.clip(y1 * sy, 0, frame.map.height)),
            confidence=float(conf),
        )
        if b.x_max > b.x_min and b.y_max > b.y_min:
            boxes.append(b)
    return nms(boxes, settings.nms_iou_threshold)


def boxes_to_init(boxes: list[DetectionBox], frame: RasterFrame) -> InitParams:
    """Convert pixel boxes to data-space centroids and density-mass sizes."""
    k = len(boxes)
    if k == 0:
        return InitParams(k=0, centroids=np.empty((0, 2)),
                          size_estimates=np.empty(0), confidences=np.empty(0))
    grid_sum = frame.grid.sum()
    points_per_mass = frame.total_points / grid_sum if grid_sum > 0 else 0.0
    centroids = np.empty((k, 2))
    sizes = np.empty(k)
    confs = np.empty(k)
    for i, box in enumerate(boxes):
        centroids[i] = to_data_space(box.center(), frame.map)
        r0 = int(np.clip(np.floor(box.y_min), 0, frame.map.height))
        r1 = int(np.clip(np.ceil(box.y_max), 0, frame.map.height))
        c0 = int(np.clip(np.floor(box.x_min), 0, frame.map.width))
        c1 = int(np.clip(np.ceil(box.x_max), 0, frame.map.width))
        sizes[i] = frame.grid[r0:r1, c0:c1].sum() * points_per_mass
        confs[i] = box.confidence
    return InitParams(k=k, centroids=centroids, size_estimates=sizes, confidences=confs)


def save_init_params(params: InitParams, boxes: list[DetectionBox], path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(params.to_json_dict(boxes), fh, indent=2)


def load_init_params(path: str | Path) -> InitParams:
    with open(path) as fh:
        return InitParams.from_json_dict(json.load(fh))
