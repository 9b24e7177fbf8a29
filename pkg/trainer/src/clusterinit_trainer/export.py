"""Export a trained detector to the portable npz artifact.

The artifact's manifest and tensor layout follow the toolkit's model-file
contract (conv / relu / maxpool vocabulary, 5-channel grid head); the
round-trip check drives the toolkit's own CLI on validation frames and
compares boxes, so export fidelity is verified through the public
interface rather than shared code.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .corpus import read_pgm
from .model import GridDetector, decode, iou_xyxy, nms_xyxy

FORMAT_NAME = "cluster-grid-detector"
FORMAT_VERSION = 1


def export_model(model: GridDetector, path: str | Path) -> Path:
    """Write the npz artifact; the parent directory must exist."""
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"output directory {path.parent} does not exist")
    layers = []
    arrays: dict[str, np.ndarray] = {}
    index = 0
    for module in model.backbone:
        if isinstance(module, nn.Conv2d):
            arrays[f"w{index}"] = module.weight.detach().numpy().astype(np.float32)
            arrays[f"b{index}"] = module.bias.detach().numpy().astype(np.float32)
            layers.append({"op": "conv", "weight": f"w{index}", "bias": f"b{index}",
                           "stride": 1, "pad": module.padding[0], "activation": "relu"})
            index += 1
        elif isinstance(module, nn.MaxPool2d):
            layers.append({"op": "maxpool", "size": 2})
    arrays[f"w{index}"] = model.head.weight.detach().numpy().astype(np.float32)
    arrays[f"b{index}"] = model.head.bias.detach().numpy().astype(np.float32)
    layers.append({"op": "conv", "weight": f"w{index}", "bias": f"b{index}",
                   "stride": 1, "pad": 0})
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "input": {"channels": 1, "size": model.image_size},
        "grid": model.grid,
        "layers": layers,
    }
    np.savez(path, manifest=json.dumps(manifest), **arrays)
    # np.savez appends .npz when missing; normalize the reported path
    return path if path.exists() else path.with_suffix(path.suffix + ".npz")


def _native_boxes(model: GridDetector, frame_dir: Path,
                  confidence_threshold: float, nms_iou: float):
    grid = torch.from_numpy(read_pgm(frame_dir / "image.pgm"))[None, None]
    frame_res = grid.shape[-1]
    if frame_res != model.image_size:
        grid = nn.functional.interpolate(grid, size=(model.image_size,) * 2,
                                         mode="bilinear", align_corners=False)
    with torch.no_grad():
        logits = model(grid)
    boxes, confs = decode(logits, model.image_size, confidence_threshold)[0]
    boxes, confs = nms_xyxy(boxes, confs, nms_iou)
    return boxes * (frame_res / model.image_size), confs


def parity_check(model: GridDetector, artifact_path: Path, frame_dirs: list[Path],
                 confidence_threshold: float = 0.25, nms_iou: float = 0.45,
                 min_iou: float = 0.9) -> dict:
    """Exported artifact must reproduce the native model's boxes.

    Runs `clusterinit detect --backend model` on up to 5 frames and
    greedily matches boxes; fails if counts differ or any matched pair
    falls below min_iou.
    """
    frame_dirs = frame_dirs[:5]
    checked = 0
    with tempfile.TemporaryDirectory() as tmp:
        frames_root = Path(tmp) / "frames"
        frames_root.mkdir()
        for frame_dir in frame_dirs:
            (frames_root / frame_dir.name).symlink_to(frame_dir.resolve())
        out = Path(tmp) / "dets"
        cmd = [sys.executable, "-m", "clusterinit.cli", "detect",
               "--frames", str(frames_root), "--out", str(out),
               "--backend", "model", "--model", str(artifact_path),
               "--confidence", str(confidence_threshold),
               "--nms-iou", str(nms_iou)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"toolkit CLI failed on the exported artifact:\n{proc.stderr}")
        for frame_dir in frame_dirs:
            init_path = out / frame_dir.name / "init.json"
            exported = json.loads(init_path.read_text())
            native_boxes, _ = _native_boxes(model, frame_dir,
                                            confidence_threshold, nms_iou)
            cli_boxes = np.array([[b["x_min"], b["y_min"], b["x_max"], b["y_max"]]
                                  for b in exported["boxes"]], dtype=np.float64)
            if len(cli_boxes) != len(native_boxes):
                raise RuntimeError(
                    f"box count mismatch on {frame_dir.name}: "
                    f"native {len(native_boxes)} vs exported {len(cli_boxes)}")
            used = set()
            for nb in native_boxes:
                best, best_j = 0.0, -1
                for j, cb in enumerate(cli_boxes):
                    if j in used:
                        continue
                    overlap = iou_xyxy(nb, cb)
                    if overlap > best:
                        best, best_j = overlap, j
                if best < min_iou:
                    raise RuntimeError(
                        f"box IoU {best:.3f} below {min_iou} on {frame_dir.name}")
                used.add(best_j)
            checked += 1
    return {"frames_checked": checked, "min_iou": min_iou}
