"""Command line for the trainer: split inspection and full training runs."""

from __future__ import annotations

import argparse
import json
import sys

from .corpus import prepare_split
from .train import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clusterinit-train")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="write a deterministic train/val split manifest")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="split.json")

    p = sub.add_parser("train", help="train and export the detector")
    p.add_argument("--data-dir", required=True, help="raster output directory")
    p.add_argument("--out", default="train_out")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--image-size", type=int, default=640)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-parity-check", action="store_true",
                   help="skip the exported-artifact round-trip check")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "split":
            manifest = prepare_split(args.data_dir, args.val_fraction, args.seed,
                                     out_path=args.out)
            print(f"{len(manifest['train'])} train / {len(manifest['val'])} val "
                  f"-> {args.out}")
            return 0
        config = TrainConfig(
            data_dir=args.data_dir, out_dir=args.out, epochs=args.epochs,
            batch_size=args.batch_size, initial_lr=args.lr,
            image_size=args.image_size, val_fraction=args.val_fraction,
            seed=args.seed, run_parity_check=not args.no_parity_check)
        report = train(config)
        print(json.dumps({"final_map50": report.final_map50,
                          "val_images": report.val_image_count,
                          "export_path": report.export_path,
                          "elapsed_seconds": round(report.elapsed_seconds, 1)}))
        return 0
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
