"""Command-line pipelines: gen, raster, detect, cluster, bench, timing.

Stages communicate through files so each can run independently and the
detection-model trainer can consume raster output unchanged. Every
command writes a run_manifest.json next to its outputs. Exit codes:
0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, charts, clustering, evaluate
from .artifact import load_model
from .datagen import (Balance, Dataset2D, GeneratorConfig, ShapeFamily, SuiteSpec,
                      generate, generate_suite, load_dataset, save_dataset)
from .detector import (DetectorSettings, boxes_to_init, density_blob_detect,
                       load_init_params, model_detect, save_init_params)
from .errors import ClusterInitError
from .indices import IndexKind, parse_index_kinds
from .raster import load_frame, make_labels, rasterize, save_frame
from .seeds import derive_seed


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": command,
        "parameters": {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()},
        "seed": params.get("seed", 0),
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def _default_out() -> Path:
    return Path(os.environ.get("CLUSTERINIT_OUT", "."))


def _dataset_dirs(root: Path) -> list[Path]:
    if (root / "meta.json").exists():
        return [root]
    dirs = sorted(p for p in root.iterdir() if (p / "meta.json").exists())
    if not dirs:
        raise UsageError(f"no datasets under {root}")
    return dirs


def _frame_dirs(root: Path) -> list[Path]:
    if (root / "frame.json").exists():
        return [root]
    dirs = sorted(p for p in root.iterdir() if (p / "frame.json").exists())
    if not dirs:
        raise UsageError(f"no frames under {root}")
    return dirs


_FAMILIES = {f.value: f for f in ShapeFamily}
_BALANCES = {"equal": Balance.EQUAL, "random": Balance.RANDOM_PROPORTIONS}


def _suite_spec_from_args(args) -> SuiteSpec:
    spec = SuiteSpec()
    if args.family != "mix":
        spec.family_mix = {_FAMILIES[args.family]: 1.0}
    spec.k_range = (args.k_range[0], args.k_range[1])
    spec.n_range = (args.n_range[0], args.n_range[1])
    spec.sigma_span = (args.sigma_range[0], args.sigma_range[1])
    spec.separation_min = args.separation
    if args.balance != "mix":
        spec.balance_choices = (_BALANCES[args.balance],)
    return spec


def cmd_gen(args) -> int:
    out = Path(args.out)
    spec = _suite_spec_from_args(args)
    if args.k is not None or args.n is not None:
        # single explicit configuration repeated per count with derived seeds
        datasets = []
        for i in range(args.count):
            config = GeneratorConfig(
                shape_family=_FAMILIES[args.family] if args.family != "mix"
                else ShapeFamily.GAUSSIAN_BLOBS,
                k=args.k if args.k is not None else 3,
                n_total=args.n if args.n is not None else 20000,
                variance_range=spec.sigma_span,
                separation_min=args.separation,
                balance=_BALANCES[args.balance] if args.balance != "mix" else Balance.EQUAL,
                noise_level=args.noise,
                seed=derive_seed(args.seed, i, 1),
            )
            ds = generate(config)
            ds.dataset_id = f"ds_{i:04d}"
            datasets.append(ds)
    else:
        datasets = generate_suite(args.count, args.seed, spec=spec)
    for ds in datasets:
        save_dataset(ds, out / ds.dataset_id)
    _write_manifest(out, "gen", args)
    print(f"wrote {len(datasets)} dataset(s) under {out}")
    return 0


def cmd_raster(args) -> int:
    out = Path(args.out)
    dirs = _dataset_dirs(Path(args.data))
    for d in dirs:
        ds = load_dataset(d)
        frame = rasterize(ds, resolution=args.resolution, margin_frac=args.margin)
        labels = make_labels(ds, frame, coverage_quantile=args.quantile)
        save_frame(frame, out / d.name, labels)
    _write_manifest(out, "raster", args)
    print(f"rasterized {len(dirs)} dataset(s) at {args.resolution}x{args.resolution}")
    return 0


def _settings_from_args(args) -> DetectorSettings:
    return DetectorSettings(
        confidence_threshold=args.confidence,
        nms_iou_threshold=args.nms_iou,
        smoothing_sigma_px=args.smoothing,
        density_threshold_frac=args.density_frac,
        min_box_area_px=args.min_area,
    )


def cmd_detect(args) -> int:
    if args.backend == "model" and not args.model:
        raise UsageError("--backend model requires --model PATH")
    out = Path(args.out)
    settings = _settings_from_args(args)
    model = load_model(args.model) if args.backend == "model" else None
    dirs = _frame_dirs(Path(args.frames))
    for d in dirs:
        frame = load_frame(d)
        if args.backend == "blob":
            boxes = density_blob_detect(frame, settings)
        else:
            boxes = model_detect(frame, model, settings)
        init = boxes_to_init(boxes, frame)
        (out / d.name).mkdir(parents=True, exist_ok=True)
        save_init_params(init, boxes, out / d.name / "init.json")
    _write_manifest(out, "detect", args)
    print(f"detected over {len(dirs)} frame(s) with backend={args.backend}")
    return 0


def cmd_cluster(args) -> int:
    if args.algo not in ("kmeans", "xmeans", "rfcm", "gmm"):
        raise UsageError(f"unknown algo {args.algo!r}")
    if args.init == "detected" and not args.init_file:
        raise UsageError("--init detected requires --init-file PATH")
    data_dir = Path(args.data)
    ds = load_dataset(data_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.algo == "xmeans":
        result = clustering.xmeans(ds.points, k_min=1, k_max=args.k or 20, seed=args.seed)
    else:
        if args.init == "detected":
            spec = clustering.InitSpec.detected(load_init_params(args.init_file))
        elif args.init == "random":
            spec = clustering.InitSpec.random(args.k or ds.k_true, args.seed)
        else:
            spec = clustering.InitSpec.plusplus(args.k or ds.k_true, args.seed)
        result = clustering.ALGORITHMS[args.algo](ds.points, spec)
    result.save(out / "result.json")
    _write_manifest(out, "cluster", args)
    ar = evaluate.accuracy_rate(ds.labels, result.assignments)
    print(f"{args.algo}: k={result.k} iterations={result.iterations} "
          f"converged={result.converged} inertia={result.inertia:.6g} ar={ar:.4f}")
    return 0


def cmd_bench(args) -> int:
    if args.backend == "model" and not args.model:
        raise UsageError("--backend model requires --model PATH")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    algorithms = tuple(a.strip() for a in args.algos.split(",") if a.strip())
    for a in algorithms:
        if a not in clustering.ALGORITHMS:
            raise UsageError(f"unknown algo {a!r}")
    index_kinds = tuple(parse_index_kinds(args.indices)) if args.indices else ()
    spec = _suite_spec_from_args(args)
    suite = generate_suite(args.suite_size, args.seed, spec=spec)
    model = load_model(args.model) if args.backend == "model" else None
    records = evaluate.run_bench(
        suite, backend=args.backend, model=model,
        settings=_settings_from_args(args), algorithms=algorithms,
        index_kinds=index_kinds, seed=args.seed, k_max=args.k_max,
        subsample_frac=args.subsample, jobs=args.jobs)
    evaluate.write_bench_csv(records, out / "bench.csv", algorithms, index_kinds)
    summary = evaluate.summarize(records)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    charts.render_bench_charts(records, summary, out / "charts")
    _write_manifest(out, "bench", args)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_timing(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index_kinds = tuple(parse_index_kinds(args.indices)) if args.indices else \
        (IndexKind.BIC, IndexKind.AIC)
    rows = evaluate.time_scaling_experiment(
        [int(v) for v in args.n_values.split(",")], k_true=args.k,
        index_kinds=index_kinds, seed=args.seed, k_max=args.k_max)
    evaluate.write_timing_csv(rows, out / "timing.csv")
    charts.render_timing_chart(rows, out / "charts")
    _write_manifest(out, "timing", args)
    for row in rows:
        print(json.dumps(row))
    return 0


def _add_suite_flags(p):
    p.add_argument("--family", default="mix", choices=["mix", *_FAMILIES])
    p.add_argument("--k-range", nargs=2, type=int, default=[2, 12], metavar=("LO", "HI"))
    p.add_argument("--n-range", nargs=2, type=int, default=[20000, 50000], metavar=("LO", "HI"))
    p.add_argument("--sigma-range", nargs=2, type=float, default=[1.0, 2.5], metavar=("LO", "HI"))
    p.add_argument("--separation", type=float, default=8.0)
    p.add_argument("--balance", default="mix", choices=["mix", "equal", "random"])
    p.add_argument("--noise", type=float, default=0.05)


def _add_detector_flags(p):
    p.add_argument("--backend", default="blob", choices=["blob", "model"])
    p.add_argument("--model", default=None, help="model artifact path (npz)")
    p.add_argument("--confidence", type=float, default=0.25)
    p.add_argument("--nms-iou", type=float, default=0.45)
    p.add_argument("--smoothing", type=float, default=3.0)
    p.add_argument("--density-frac", type=float, default=0.08)
    p.add_argument("--min-area", type=int, default=25)


def build_parser() -> _Parser:
    parser = _Parser(prog="clusterinit",
                     description="Image-based clustering initialization toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate labeled synthetic datasets")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=_default_out(), type=Path)
    p.add_argument("--k", type=int, default=None, help="fixed cluster count")
    p.add_argument("--n", type=int, default=None, help="fixed point count")
    _add_suite_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("raster", help="rasterize datasets to PGM images + box labels")
    p.add_argument("--data", required=True, help="dataset directory (or parent of many)")
    p.add_argument("--out", default=_default_out(), type=Path)
    p.add_argument("--resolution", type=int, default=640)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--quantile", type=float, default=0.995)
    p.set_defaults(func=cmd_raster)

    p = sub.add_parser("detect", help="run a detection backend over frames")
    p.add_argument("--frames", required=True, help="raster output directory")
    p.add_argument("--out", default=_default_out(), type=Path)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("cluster", help="cluster one dataset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--algo", default="kmeans")
    p.add_argument("--init", default="plusplus", choices=["detected", "random", "plusplus"])
    p.add_argument("--init-file", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=_default_out(), type=Path)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("bench", help="full benchmark harness")
    p.add_argument("--suite-size", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=_default_out(), type=Path)
    p.add_argument("--algos", default="kmeans")
    p.add_argument("--indices", default="", help="comma list: bic,aic,dunn,db,sw,ch,gap")
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--subsample", type=float, default=1.0,
                   help="fraction of points the detector sees")
    p.add_argument("--jobs", type=int, default=1)
    _add_suite_flags(p)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("timing", help="time-vs-n scaling experiment")
    p.add_argument("--n-values", default="10000,20000,40000")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--indices", default="bic,aic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=_default_out(), type=Path)
    p.set_defaults(func=cmd_timing)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # argparse --version / --help paths
        return int(exc.code or 0)
    except ClusterInitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        traceback.print_exc()
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
