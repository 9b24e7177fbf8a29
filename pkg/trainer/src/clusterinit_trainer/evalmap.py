"""Detection quality: average precision at IoU 0.5, single class."""

from __future__ import annotations

import numpy as np

from .model import iou_xyxy


def average_precision(predictions, ground_truths, iou_threshold: float = 0.5) -> float:
    """All-point interpolated AP.

    predictions: per image, (boxes[n, 4] xyxy, confidences[n]).
    ground_truths: per image, boxes[m, 4] xyxy.
    """
    total_gt = sum(len(g) for g in ground_truths)
    if total_gt == 0:
        return 0.0
    scored = []
    for img_id, (boxes, confs) in enumerate(predictions):
        for box, conf in zip(boxes, confs):
            scored.append((float(conf), img_id, box))
    if not scored:
        return 0.0
    scored.sort(key=lambda t: -t[0])
    matched = [np.zeros(len(g), dtype=bool) for g in ground_truths]
    tp = np.zeros(len(scored))
    for rank, (_, img_id, box) in enumerate(scored):
        gts = ground_truths[img_id]
        best_iou, best_j = 0.0, -1
        for j, gt in enumerate(gts):
            if matched[img_id][j]:
                continue
            overlap = iou_xyxy(box, gt)
            if overlap > best_iou:
                best_iou, best_j = overlap, j
        if best_j >= 0 and best_iou >= iou_threshold:
            matched[img_id][best_j] = True
            tp[rank] = 1.0
    cum_tp = np.cumsum(tp)
    recall = cum_tp / total_gt
    precision = cum_tp / np.arange(1, len(scored) + 1)
    # monotone precision envelope, integrated over recall
    for i in range(len(precision) - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = 0.0
    prev_r = 0.0
    for r, p in zip(recall, precision):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)
