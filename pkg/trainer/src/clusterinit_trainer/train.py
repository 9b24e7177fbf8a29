"""Training loop: SGD on the grid-head detector, mAP@0.5 on a held-out split."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .corpus import load_arrays, prepare_split, scan_corpus
from .evalmap import average_precision
from .export import export_model, parity_check
from .model import (GridDetector, decode, detection_loss, nms_xyxy,
                    targets_from_boxes)


@dataclass
class TrainConfig:
    data_dir: str
    out_dir: str = "train_out"
    epochs: int = 20
    batch_size: int = 16
    initial_lr: float = 1e-2
    image_size: int = 640
    val_fraction: float = 0.2
    seed: int = 0
    momentum: float = 0.9
    eval_confidence: float = 0.05
    nms_iou: float = 0.45
    run_parity_check: bool = True


@dataclass
class TrainReport:
    final_map50: float
    epoch_losses: list[float]
    val_image_count: int
    export_path: str
    hyperparameters: dict = field(default_factory=dict)
    parity: dict = field(default_factory=dict)
    elapsed_seconds: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "final_map50": self.final_map50,
            "epoch_losses": self.epoch_losses,
            "val_image_count": self.val_image_count,
            "export_path": self.export_path,
            "hyperparameters": self.hyperparameters,
            "parity": self.parity,
            "elapsed_seconds": self.elapsed_seconds,
        }


CONFIDENCE_GRID = (0.25, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
NMS_GRID = (0.45, 0.35, 0.25)


def calibrate_thresholds(model: GridDetector, images: torch.Tensor,
                         box_lists) -> dict:
    """Pick (confidence, nms_iou) maximizing exact box-count accuracy on val.

    The label files carry one box per true cluster, so count accuracy is
    the validation analogue of the downstream k-detection rate.
    """
    model.eval()
    size = model.image_size
    raw = []
    with torch.no_grad():
        for start in range(0, images.shape[0], 32):
            logits = model(images[start:start + 32])
            raw.extend(decode(logits, size, confidence_threshold=0.0))
    model.train()
    best = {"confidence": 0.25, "nms_iou": 0.45, "count_accuracy": -1.0}
    for conf in CONFIDENCE_GRID:
        for nms_iou in NMS_GRID:
            hits = 0
            for (boxes, confs), gt in zip(raw, box_lists):
                keep = confs >= conf
                kept, _ = nms_xyxy(boxes[keep], confs[keep], nms_iou)
                hits += int(len(kept) == len(gt))
            accuracy = hits / max(len(box_lists), 1)
            if accuracy > best["count_accuracy"]:
                best = {"confidence": conf, "nms_iou": nms_iou,
                        "count_accuracy": accuracy}
    return best


def evaluate_map(model: GridDetector, images: torch.Tensor, box_lists,
                 confidence: float, nms_iou: float) -> float:
    model.eval()
    size = model.image_size
    predictions = []
    ground_truths = []
    with torch.no_grad():
        for start in range(0, images.shape[0], 32):
            logits = model(images[start:start + 32])
            for boxes, confs in decode(logits, size, confidence):
                predictions.append(nms_xyxy(boxes, confs, nms_iou))
    for boxes in box_lists:
        if len(boxes):
            xyxy = np.stack([
                (boxes[:, 0] - boxes[:, 2] / 2) * size,
                (boxes[:, 1] - boxes[:, 3] / 2) * size,
                (boxes[:, 0] + boxes[:, 2] / 2) * size,
                (boxes[:, 1] + boxes[:, 3] / 2) * size,
            ], axis=1)
        else:
            xyxy = np.zeros((0, 4), dtype=np.float32)
        ground_truths.append(xyxy)
    model.train()
    return average_precision(predictions, ground_truths, iou_threshold=0.5)


def train(config: TrainConfig) -> TrainReport:
    """Train, evaluate, export; raises on an empty corpus or divergence."""
    t0 = time.perf_counter()
    torch.manual_seed(config.seed)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    split = prepare_split(config.data_dir, config.val_fraction, config.seed,
                          out_path=out_dir / "split.json")
    items = {item.frame_dir.name: item for item in scan_corpus(config.data_dir)}
    train_items = [items[name] for name in split["train"]]
    val_items = [items[name] for name in split["val"]]
    train_images, train_boxes = load_arrays(train_items, config.image_size)
    val_images, val_boxes = load_arrays(val_items, config.image_size)

    model = GridDetector(config.image_size)
    opt = torch.optim.SGD(model.parameters(), lr=config.initial_lr,
                          momentum=config.momentum)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=config.epochs)
    obj_all, txywh_all = targets_from_boxes(train_boxes, model.grid)

    generator = torch.Generator().manual_seed(config.seed)
    epoch_losses = []
    n_train = train_images.shape[0]
    for epoch in range(config.epochs):
        order = torch.randperm(n_train, generator=generator)
        losses = []
        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits = model(train_images[idx])
            loss = detection_loss(logits, obj_all[idx], txywh_all[idx])
            loss_value = float(loss.detach())
            if not math.isfinite(loss_value):
                raise RuntimeError(f"diverged at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss_value)
        sched.step()
        epoch_losses.append(float(np.mean(losses)))

    final_map = evaluate_map(model, val_images, val_boxes,
                             config.eval_confidence, config.nms_iou)
    calibration = calibrate_thresholds(model, val_images, val_boxes)
    export_path = export_model(model, out_dir / "model.npz")
    parity = {}
    if config.run_parity_check:
        parity = parity_check(model, export_path,
                              [item.frame_dir for item in val_items])

    report = TrainReport(
        final_map50=final_map,
        epoch_losses=epoch_losses,
        val_image_count=len(val_items),
        export_path=str(export_path),
        hyperparameters={
            "epochs": config.epochs, "batch_size": config.batch_size,
            "initial_lr": config.initial_lr, "optimizer": "sgd",
            "momentum": config.momentum, "lr_schedule": "cosine",
            "image_size": config.image_size, "val_fraction": config.val_fraction,
            "seed": config.seed, "grid": model.grid,
            "eval_confidence": config.eval_confidence, "nms_iou": config.nms_iou,
        },
        parity=parity,
        elapsed_seconds=time.perf_counter() - t0,
    )
    report.hyperparameters["calibration"] = calibration
    with open(out_dir / "train_report.json", "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
    return report
