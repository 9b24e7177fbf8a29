"""Grid-head detector: a small conv stack emitting one box per cell.

The layer vocabulary (conv 3x3 / relu / maxpool 2, then a 1x1 conv head)
matches the portable artifact format one-to-one, and the decode applies
the same math as the toolkit's numpy executor: sigmoid on all five
channels, box center (cell + sxy) / grid, extents as image fractions.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

DOWNSAMPLE = 16
CHANNELS = (8, 16, 32, 48)


class GridDetector(nn.Module):
    def __init__(self, image_size: int):
        super().__init__()
        if image_size % DOWNSAMPLE:
            raise ValueError(f"image_size must be a multiple of {DOWNSAMPLE}")
        self.image_size = image_size
        self.grid = image_size // DOWNSAMPLE
        layers: list[nn.Module] = []
        in_ch = 1
        for out_ch in CHANNELS:
            layers += [nn.Conv2d(in_ch, out_ch, 3, padding=1), nn.ReLU(),
                       nn.MaxPool2d(2)]
            in_ch = out_ch
        self.backbone = nn.Sequential(*layers)
        self.head = nn.Conv2d(in_ch, 5, 1)
        with torch.no_grad():
            # objectness bias starts at the positive-cell prior so sparse
            # positives are not drowned out by the all-background phase
            self.head.bias[4] = -4.0

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """(B, 1, S, S) -> raw logits (B, 5, G, G)."""
        return self.head(self.backbone(images))


def targets_from_boxes(box_lists, grid: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Cell-wise objectness and box targets for a batch of label arrays.

    Boxes spanning at least 1.5 cells along an axis also mark the nearest
    neighbor cell on that axis with the same box (offsets clamped into
    the sigmoid's range): wide activations fire adjacent cells anyway,
    and training them toward the true box makes the duplicates
    near-identical so non-max suppression collapses them. Sub-cell boxes
    keep the single-cell assignment, where a shifted duplicate would not
    overlap enough to be suppressed.
    """
    batch = len(box_lists)
    obj = torch.zeros(batch, grid, grid)
    txywh = torch.zeros(batch, 4, grid, grid)
    lo, hi = 0.02, 0.98
    for b, boxes in enumerate(box_lists):
        for cx, cy, w, h in np.asarray(boxes, dtype=np.float64).tolist():
            gx = cx * grid
            gy = cy * grid
            col = min(int(gx), grid - 1)
            row = min(int(gy), grid - 1)
            col2 = col + (1 if gx - col > 0.5 else -1)
            row2 = row + (1 if gy - row > 0.5 else -1)
            cells = [(row, col)]
            if w * grid >= 1.5 and 0 <= col2 < grid:
                cells.append((row, col2))
            if h * grid >= 1.5 and 0 <= row2 < grid:
                cells.append((row2, col))
            for r, c in cells:
                obj[b, r, c] = 1.0
                txywh[b, 0, r, c] = min(max(gx - c, lo), hi)
                txywh[b, 1, r, c] = min(max(gy - r, lo), hi)
                txywh[b, 2, r, c] = w
                txywh[b, 3, r, c] = h
    return obj, txywh


def detection_loss(logits: torch.Tensor, obj: torch.Tensor, txywh: torch.Tensor,
                   box_weight: float = 5.0, noobj_weight: float = 0.5) -> torch.Tensor:
    """Objectness BCE everywhere plus box regression on object cells."""
    obj_logit = logits[:, 4]
    bce = nn.functional.binary_cross_entropy_with_logits(
        obj_logit, obj, reduction="none")
    weights = torch.where(obj > 0, torch.ones_like(bce), noobj_weight * torch.ones_like(bce))
    loss = (bce * weights).mean()
    mask = obj > 0
    if mask.any():
        pred_box = torch.sigmoid(logits[:, :4])
        diff = (pred_box - txywh) ** 2
        loss = loss + box_weight * diff.permute(0, 2, 3, 1)[mask].mean()
    return loss


def decode(logits: torch.Tensor, image_size: int,
           confidence_threshold: float = 0.25) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per image: (boxes[n, 4] xyxy in input pixels, confidences[n])."""
    probs = torch.sigmoid(logits.detach())
    batch, _, grid, _ = probs.shape
    cell = image_size / grid
    cols = torch.arange(grid).repeat(grid, 1)
    rows = cols.T
    out = []
    for b in range(batch):
        sx, sy, sw, sh, conf = probs[b]
        cx = (cols + sx) * cell
        cy = (rows + sy) * cell
        w = sw * image_size
        h = sh * image_size
        keep = conf >= confidence_threshold
        boxes = torch.stack([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2],
                            dim=-1)[keep]
        boxes = boxes.clamp(0, image_size)
        out.append((boxes.numpy(), conf[keep].numpy()))
    return out


def iou_xyxy(a: np.ndarray, b: np.ndarray) -> float:
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    if inter <= 0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return float(inter / (area_a + area_b - inter))


def nms_xyxy(boxes: np.ndarray, confs: np.ndarray, iou_threshold: float = 0.45):
    order = np.lexsort((boxes[:, 1], boxes[:, 0], -confs))
    kept: list[int] = []
    for i in order:
        if all(iou_xyxy(boxes[i], boxes[j]) <= iou_threshold for j in kept):
            kept.append(int(i))
    return boxes[kept], confs[kept]
