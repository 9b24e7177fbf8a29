"""Evaluation metrics and the benchmark harness.

Per dataset the harness rasterizes, detects, converts boxes to
initialization parameters, then runs each selected algorithm once with
the detected init and once with a single-restart random init seeded at
the true k. Optional index sweeps estimate k for comparison. Records
are schedule-independent apart from wall-time fields.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import clustering
from .artifact import ModelArtifact
from .datagen import Dataset2D, GeneratorConfig, ShapeFamily, generate
from .detector import (DetectorSettings, boxes_to_init, density_blob_detect,
                       model_detect)
from .errors import ClusterInitError
from .indices import IndexKind, estimate_k
from .raster import rasterize
from .seeds import derive_seed, rng_for


def euclidean(p, q) -> float:
    """Euclidean distance between two coordinate pairs."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(np.sqrt(((q - p) ** 2).sum()))


@dataclass
class MatchReport:
    pairs: list[tuple[int, int]]
    distances: list[float]
    unmatched_true: list[int]
    unmatched_detected: list[int]
    mean_distance: float
    max_distance: float


def match_centroids(true_centroids, detected) -> MatchReport:
    """Minimum-total-distance bipartite matching of two centroid sets."""
    t = np.atleast_2d(np.asarray(true_centroids, dtype=np.float64))
    d = np.atleast_2d(np.asarray(detected, dtype=np.float64))
    if t.size == 0 or d.size == 0:
        return MatchReport(pairs=[], distances=[],
                           unmatched_true=list(range(t.shape[0])),
                           unmatched_detected=list(range(d.shape[0])),
                           mean_distance=0.0, max_distance=0.0)
    cost = np.sqrt(((t[:, None, :] - d[None, :, :]) ** 2).sum(axis=2))
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols)]
    distances = [float(cost[r, c]) for r, c in pairs]
    return MatchReport(
        pairs=pairs,
        distances=distances,
        unmatched_true=sorted(set(range(t.shape[0])) - {r for r, _ in pairs}),
        unmatched_detected=sorted(set(range(d.shape[0])) - {c for _, c in pairs}),
        mean_distance=float(np.mean(distances)) if distances else 0.0,
        max_distance=float(np.max(distances)) if distances else 0.0,
    )


def accuracy_rate(labels_true, labels_pred) -> float:
    """Fraction of points matched under the best cluster-to-class assignment."""
    lt = np.asarray(labels_true, dtype=np.int64)
    lp = np.asarray(labels_pred, dtype=np.int64)
    if lt.shape != lp.shape:
        raise ValueError("label sequences differ in length")
    n = lt.shape[0]
    if n == 0:
        raise ValueError("empty label sequences")
    kt = int(lt.max()) + 1
    kp = int(lp.max()) + 1
    table = np.zeros((kt, kp), dtype=np.int64)
    np.add.at(table, (lt, lp), 1)
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum() / n)


@dataclass
class AlgoArm:
    ar_detected: float = math.nan
    ar_random: float = math.nan
    iterations_detected: int = 0
    iterations_random: int = 0
    time_detected_s: float = 0.0
    time_random_s: float = 0.0


@dataclass
class BenchRecord:
    dataset_id: str
    k_true: int
    k_detected: int
    k_by_index: dict[str, int] = field(default_factory=dict)
    centroid_match: MatchReport | None = None
    ar_detected_init: float = math.nan
    ar_random_init: float = math.nan
    iterations_detected: int = 0
    iterations_random: int = 0
    time_detect_s: float = 0.0
    time_index_sweep_s: float = 0.0
    time_cluster_detected_s: float = 0.0
    time_cluster_random_s: float = 0.0
    per_algorithm: dict[str, AlgoArm] = field(default_factory=dict)
    bbox_diagonal: float = 0.0
    error: str = ""


def _bbox_diagonal(points: np.ndarray) -> float:
    span = points.max(axis=0) - points.min(axis=0)
    return float(np.sqrt((span ** 2).sum()))


def bench_one(ds: Dataset2D, *, backend: str = "blob",
              model: ModelArtifact | None = None,
              settings: DetectorSettings | None = None,
              algorithms: tuple[str, ...] = ("kmeans",),
              index_kinds: tuple[IndexKind, ...] = (),
              seed: int = 0, k_max: int = 12,
              subsample_frac: float = 1.0) -> BenchRecord:
    """One dataset through detect + cluster + optional index sweeps."""
    settings = settings or DetectorSettings()
    record = BenchRecord(dataset_id=ds.dataset_id, k_true=ds.k_true, k_detected=0)
    record.bbox_diagonal = _bbox_diagonal(ds.points)
    try:
        detect_points = ds.points
        if subsample_frac < 1.0:
            n_sub = max(1, int(round(subsample_frac * ds.points.shape[0])))
            idx = rng_for(seed, 7).choice(ds.points.shape[0], size=n_sub, replace=False)
            detect_points = ds.points[np.sort(idx)]
        t0 = time.perf_counter()
        frame = rasterize(Dataset2D(points=detect_points,
                                    labels=np.zeros(len(detect_points), dtype=np.int64),
                                    centroids_true=ds.centroids_true,
                                    k_true=ds.k_true, config=ds.config))
        if backend == "blob":
            boxes = density_blob_detect(frame, settings)
        elif backend == "model":
            if model is None:
                raise ClusterInitError("model backend requires a model artifact")
            boxes = model_detect(frame, model, settings)
        else:
            raise ClusterInitError(f"unknown backend {backend!r}")
        init = boxes_to_init(boxes, frame)
        if subsample_frac < 1.0:
            init.size_estimates = init.size_estimates / max(subsample_frac, 1e-9)
        record.time_detect_s = time.perf_counter() - t0
        record.k_detected = init.k
        record.centroid_match = match_centroids(ds.centroids_true, init.centroids)

        detected_spec = clustering.InitSpec.detected(init)
        for name in algorithms:
            algo = clustering.ALGORITHMS[name]
            arm = AlgoArm()
            res_det = algo(ds.points, detected_spec)
            arm.ar_detected = accuracy_rate(ds.labels, res_det.assignments)
            arm.iterations_detected = res_det.iterations
            arm.time_detected_s = res_det.elapsed_seconds
            rand_spec = clustering.InitSpec.random(ds.k_true, derive_seed(seed, 11))
            res_rand = algo(ds.points, rand_spec)
            arm.ar_random = accuracy_rate(ds.labels, res_rand.assignments)
            arm.iterations_random = res_rand.iterations
            arm.time_random_s = res_rand.elapsed_seconds
            record.per_algorithm[name] = arm

        if algorithms:
            first = record.per_algorithm[algorithms[0]]
            record.ar_detected_init = first.ar_detected
            record.ar_random_init = first.ar_random
            record.iterations_detected = first.iterations_detected
            record.iterations_random = first.iterations_random
            record.time_cluster_detected_s = first.time_detected_s
            record.time_cluster_random_s = first.time_random_s

        for kind in index_kinds:
            report = estimate_k(ds.points, kind, k_max=k_max, seed=derive_seed(seed, 13))
            record.k_by_index[kind.value] = report.k_selected
            record.time_index_sweep_s += report.elapsed_seconds
    except ClusterInitError as exc:
        record.error = str(exc)
    return record


def run_bench(suite: list[Dataset2D], *, backend: str = "blob",
              model: ModelArtifact | None = None,
              settings: DetectorSettings | None = None,
              algorithms: tuple[str, ...] = ("kmeans",),
              index_kinds: tuple[IndexKind, ...] = (),
              seed: int = 0, k_max: int = 12, subsample_frac: float = 1.0,
              jobs: int = 1) -> list[BenchRecord]:
    """Benchmark every dataset; per-dataset failures are recorded, not fatal."""
    if not suite:
        raise ValueError("empty suite")
    kwargs = dict(backend=backend, model=model, settings=settings,
                  algorithms=tuple(algorithms), index_kinds=tuple(index_kinds),
                  k_max=k_max, subsample_frac=subsample_frac)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(bench_one, ds, seed=derive_seed(seed, i), **kwargs)
                       for i, ds in enumerate(suite)]
            records = [f.result() for f in futures]
    else:
        records = [bench_one(ds, seed=derive_seed(seed, i), **kwargs)
                   for i, ds in enumerate(suite)]
    if all(r.error for r in records):
        raise ClusterInitError("all datasets failed")
    return records


def summarize(records: list[BenchRecord]) -> dict:
    """Aggregates mirroring the harness's reported figures."""
    ok = [r for r in records if not r.error]
    out: dict = {
        "n_datasets": len(records),
        "n_failed": len(records) - len(ok),
    }
    if not ok:
        return out
    out["k_detection_rate"] = float(np.mean([r.k_detected == r.k_true for r in ok]))
    index_kinds = sorted({k for r in ok for k in r.k_by_index})
    out["k_detection_rate_by_index"] = {
        kind: float(np.mean([r.k_by_index[kind] == r.k_true
                             for r in ok if kind in r.k_by_index]))
        for kind in index_kinds
    }
    matched = [r for r in ok if r.centroid_match is not None]
    out["centroid_distance"] = {
        "mean": float(np.mean([r.centroid_match.mean_distance for r in matched])),
        "max": float(np.max([r.centroid_match.max_distance for r in matched])),
        "mean_normalized": float(np.mean(
            [r.centroid_match.mean_distance / r.bbox_diagonal for r in matched
             if r.bbox_diagonal > 0])),
    }
    algo_names = sorted({name for r in ok for name in r.per_algorithm})
    out["algorithms"] = {}
    for name in algo_names:
        arms = [r.per_algorithm[name] for r in ok if name in r.per_algorithm]
        ratios = [a.time_detected_s / a.time_random_s for a in arms if a.time_random_s > 0]
        out["algorithms"][name] = {
            "mean_ar_detected": float(np.mean([a.ar_detected for a in arms])),
            "mean_ar_random": float(np.mean([a.ar_random for a in arms])),
            "median_iterations_detected": float(np.median(
                [a.iterations_detected for a in arms])),
            "median_iterations_random": float(np.median(
                [a.iterations_random for a in arms])),
            "mean_time_ratio_detected_vs_random": float(np.mean(ratios)) if ratios else math.nan,
        }
    out["time"] = {
        "mean_detect_s": float(np.mean([r.time_detect_s for r in ok])),
        "mean_index_sweep_s": float(np.mean([r.time_index_sweep_s for r in ok])),
    }
    return out


_BASE_COLUMNS = [
    "dataset_id", "k_true", "k_detected",
    "centroid_mean_distance", "centroid_max_distance",
    "n_unmatched_true", "n_unmatched_detected", "bbox_diagonal",
    "ar_detected_init", "ar_random_init",
    "iterations_detected", "iterations_random",
    "time_detect_s", "time_index_sweep_s",
    "time_cluster_detected_s", "time_cluster_random_s",
    "error",
]

TIMING_COLUMN_PREFIX = "time_"


def bench_csv_header(algorithms: tuple[str, ...], index_kinds: tuple[IndexKind, ...]) -> list[str]:
    header = list(_BASE_COLUMNS)
    for kind in index_kinds:
        header.append(f"k_index_{kind.value}")
    for name in algorithms:
        header += [f"{name}_ar_detected", f"{name}_ar_random",
                   f"{name}_iterations_detected", f"{name}_iterations_random",
                   f"time_{name}_detected_s", f"time_{name}_random_s"]
    return header


def write_bench_csv(records: list[BenchRecord], path: str | Path,
                    algorithms: tuple[str, ...], index_kinds: tuple[IndexKind, ...]) -> None:
    header = bench_csv_header(algorithms, index_kinds)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in records:
            cm = r.centroid_match
            row = [
                r.dataset_id, r.k_true, r.k_detected,
                f"{cm.mean_distance:.9g}" if cm else "",
                f"{cm.max_distance:.9g}" if cm else "",
                len(cm.unmatched_true) if cm else "",
                len(cm.unmatched_detected) if cm else "",
                f"{r.bbox_diagonal:.9g}",
                f"{r.ar_detected_init:.9g}", f"{r.ar_random_init:.9g}",
                r.iterations_detected, r.iterations_random,
                f"{r.time_detect_s:.6f}", f"{r.time_index_sweep_s:.6f}",
                f"{r.time_cluster_detected_s:.6f}", f"{r.time_cluster_random_s:.6f}",
                r.error,
            ]
            for kind in index_kinds:
                row.append(r.k_by_index.get(kind.value, ""))
            for name in algorithms:
                arm = r.per_algorithm.get(name, AlgoArm())
                row += [f"{arm.ar_detected:.9g}", f"{arm.ar_random:.9g}",
                        arm.iterations_detected, arm.iterations_random,
                        f"{arm.time_detected_s:.6f}", f"{arm.time_random_s:.6f}"]
            writer.writerow(row)


def time_scaling_experiment(n_values: list[int], k_true: int = 6,
                            index_kinds: tuple[IndexKind, ...] = (IndexKind.BIC, IndexKind.AIC),
                            seed: int = 0, k_max: int = 12,
                            resolution: int = 640, repeats: int = 7) -> list[dict]:
    """Detector-pipeline vs index-sweep wall time as n grows.

    Detection-stage time is the minimum of `repeats` runs after one
    untimed warm-up: the stage is a fixed ~10ms computation on the
    resolution grid, and the minimum is the standard low-noise estimator
    for such micro-timings. The sweep runs once per index kind.
    """
    rows = []
    for i, n in enumerate(n_values):
        config = GeneratorConfig(
            shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=k_true, n_total=int(n),
            variance_range=(1.5, 1.5), separation_min=8.0,
            seed=derive_seed(seed, i))
        ds = generate(config)
        rasterize(ds, resolution=resolution)  # warm-up
        t0 = time.perf_counter()
        frame = rasterize(ds, resolution=resolution)
        t_raster = time.perf_counter() - t0
        detect_times = []
        boxes = density_blob_detect(frame)  # warm-up
        for _ in range(repeats):
            t0 = time.perf_counter()
            boxes = density_blob_detect(frame)
            detect_times.append(time.perf_counter() - t0)
        row = {
            "n": int(n),
            "t_raster_s": t_raster,
            "t_detect_stage_s": float(np.min(detect_times)),
            "t_detect_total_s": t_raster + float(np.min(detect_times)),
            "k_detected": len(boxes),
        }
        for kind in index_kinds:
            report = estimate_k(ds.points, kind, k_max=k_max, seed=derive_seed(seed, i, 3))
            row[f"t_sweep_{kind.value}_s"] = report.elapsed_seconds
            row[f"k_{kind.value}"] = report.k_selected
        rows.append(row)
    return rows


def write_timing_csv(rows: list[dict], path: str | Path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
