"""Portable detection-model file format and its numpy inference engine.

A model is a single ``.npz`` archive: a JSON ``manifest`` describing the
declared input (channels, square size), an ordered layer list, and the
output grid geometry, plus one float32 array per weight tensor. The
graph vocabulary is deliberately small (conv / relu / maxpool) so any
runtime with an array library can execute it; this module is the
reference executor and needs nothing beyond numpy.

Head convention: the last conv emits 5 channels on a G x G grid.
Per cell (tx, ty, tw, th, obj): box center = (cell + sigmoid(t)) / G,
box extent = sigmoid(tw|th), both as fractions of the input image;
confidence = sigmoid(obj).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadModelArtifactError

FORMAT_NAME = "cluster-grid-detector"
FORMAT_VERSION = 1
_EXPECTED_SIGNATURE = ("expected a single image input: float grid in [0,1], "
                       "shape (channels, size, size), plus a 5-channel grid head")


@dataclass
class ModelArtifact:
    input_channels: int
    input_size: int
    grid: int
    layers: list[dict]
    arrays: dict[str, np.ndarray]

    def forward(self, image: np.ndarray) -> np.ndarray:
        """Run the layer graph on a (channels, size, size) image."""
        x = image
        for layer in self.layers:
            op = layer["op"]
            if op == "conv":
                w = self.arrays[layer["weight"]]
                b = self.arrays[layer["bias"]]
                x = _conv2d(x, w, b, stride=layer.get("stride", 1),
                            pad=layer.get("pad", 0))
                if layer.get("activation") == "relu":
                    x = np.maximum(x, 0.0)
            elif op == "maxpool":
                x = _maxpool(x, layer.get("size", 2))
            else:
                raise BadModelArtifactError(f"bad model artifact: unknown op {op!r}")
        return x

    def predict_boxes(self, image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Decode head output into (boxes[n,4] in input pixels, confidences[n])."""
        out = self.forward(image)
        g = self.grid
        if out.shape != (5, g, g):
            raise BadModelArtifactError(
                f"bad model artifact: head produced {out.shape}, wanted (5, {g}, {g})")
        size = float(self.input_size)
        cell = size / g
        tx, ty, tw, th, obj = (_sigmoid(out[c]) for c in range(5))
        cols, rows = np.meshgrid(np.arange(g), np.arange(g))
        cx = (cols + tx) * cell
        cy = (rows + ty) * cell
        bw = tw * size
        bh = th * size
        boxes = np.stack([cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2], axis=-1)
        boxes = boxes.reshape(-1, 4)
        np.clip(boxes[:, 0::2], 0.0, size, out=boxes[:, 0::2])
        np.clip(boxes[:, 1::2], 0.0, size, out=boxes[:, 1::2])
        return boxes, obj.reshape(-1)


def save_model(model: ModelArtifact, path: str | Path) -> None:
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "input": {"channels": model.input_channels, "size": model.input_size},
        "grid": model.grid,
        "layers": model.layers,
    }
    arrays = {name: np.asarray(a, dtype=np.float32) for name, a in model.arrays.items()}
    np.savez(path, manifest=json.dumps(manifest), **arrays)


def load_model(path: str | Path) -> ModelArtifact:
    try:
        archive = np.load(path, allow_pickle=False)
    except Exception as exc:
        raise BadModelArtifactError(
            f"bad model artifact: unreadable file ({exc}); {_EXPECTED_SIGNATURE}") from exc
    try:
        manifest = json.loads(str(archive["manifest"]))
    except Exception as exc:
        raise BadModelArtifactError(
            f"bad model artifact: missing manifest; {_EXPECTED_SIGNATURE}") from exc
    if manifest.get("format") != FORMAT_NAME or manifest.get("version") != FORMAT_VERSION:
        raise BadModelArtifactError(
            f"bad model artifact: format {manifest.get('format')!r} "
            f"v{manifest.get('version')!r}; {_EXPECTED_SIGNATURE}")
    try:
        model = ModelArtifact(
            input_channels=int(manifest["input"]["channels"]),
            input_size=int(manifest["input"]["size"]),
            grid=int(manifest["grid"]),
            layers=list(manifest["layers"]),
            arrays={name: archive[name].astype(np.float64)
                    for name in archive.files if name != "manifest"},
        )
    except KeyError as exc:
        raise BadModelArtifactError(
            f"bad model artifact: manifest missing {exc}; {_EXPECTED_SIGNATURE}") from exc
    for layer in model.layers:
        for key in ("weight", "bias"):
            if key in layer and layer[key] not in model.arrays:
                raise BadModelArtifactError(
                    f"bad model artifact: missing tensor {layer[key]!r}; "
                    f"{_EXPECTED_SIGNATURE}")
    return model


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray,
            stride: int = 1, pad: int = 0) -> np.ndarray:
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    c, h, wd = x.shape
    out_ch, _, kh, kw = w.shape
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    s0, s1, s2 = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x, shape=(c, oh, ow, kh, kw),
        strides=(s0, s1 * stride, s2 * stride, s1, s2), writeable=False)
    cols = windows.transpose(1, 2, 0, 3, 4).reshape(oh * ow, c * kh * kw)
    out = cols @ w.reshape(out_ch, -1).T + b
    return np.ascontiguousarray(out.reshape(oh, ow, out_ch).transpose(2, 0, 1))


def _maxpool(x: np.ndarray, size: int) -> np.ndarray:
    c, h, w = x.shape
    h2, w2 = h // size, w // size
    return x[:, :h2 * size, :w2 * size].reshape(c, h2, size, w2, size).max(axis=(2, 4))


def bilinear_resize(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample a 2D grid with bilinear interpolation (pixel-center aligned)."""
    in_h, in_w = grid.shape
    if (in_h, in_w) == (out_h, out_w):
        return grid.copy()
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - wx) + grid[np.ix_(y0, x1)] * wx
    bot = grid[np.ix_(y1, x0)] * (1 - wx) + grid[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy
