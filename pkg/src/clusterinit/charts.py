"""SVG chart rendering for benchmark outputs (thin post-step over the CSVs)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def render_bench_charts(records, summary: dict, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    ok = [r for r in records if not r.error]

    # detection-rate bars: detector vs any swept indices
    labels = ["detector"]
    rates = [summary.get("k_detection_rate", 0.0)]
    for kind, rate in sorted(summary.get("k_detection_rate_by_index", {}).items()):
        labels.append(kind)
        rates.append(rate)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, [100 * r for r in rates], color="tab:blue")
    ax.set_ylabel("correct k (%)")
    ax.set_ylim(0, 105)
    ax.set_title("Correct cluster-count detection rate")
    path = out_dir / "k_detection_rate.svg"
    _save(fig, path)
    written.append(path)

    if ok:
        fig, ax = plt.subplots(figsize=(7, 4))
        xs = range(len(ok))
        ax.plot(xs, [r.centroid_match.mean_distance if r.centroid_match else 0
                     for r in ok], marker="o", markersize=2, linewidth=0.8)
        ax.set_xlabel("dataset")
        ax.set_ylabel("mean matched centroid distance (data units)")
        ax.set_title("Centroid distance per dataset")
        path = out_dir / "centroid_distances.svg"
        _save(fig, path)
        written.append(path)

    algos = summary.get("algorithms", {})
    if algos:
        names = sorted(algos)
        fig, ax = plt.subplots(figsize=(6, 4))
        width = 0.35
        xs = range(len(names))
        ax.bar([x - width / 2 for x in xs], [algos[n]["mean_ar_detected"] for n in names],
               width, label="detected init")
        ax.bar([x + width / 2 for x in xs], [algos[n]["mean_ar_random"] for n in names],
               width, label="random init")
        ax.set_xticks(list(xs), names)
        ax.set_ylabel("mean accuracy rate")
        ax.set_ylim(0, 1.05)
        ax.legend()
        ax.set_title("Accuracy with vs without detected initialization")
        path = out_dir / "ar_comparison.svg"
        _save(fig, path)
        written.append(path)

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.bar([x - width / 2 for x in xs],
               [algos[n]["median_iterations_detected"] for n in names],
               width, label="detected init")
        ax.bar([x + width / 2 for x in xs],
               [algos[n]["median_iterations_random"] for n in names],
               width, label="random init")
        ax.set_xticks(list(xs), names)
        ax.set_ylabel("median iterations to converge")
        ax.legend()
        ax.set_title("Iterations with vs without detected initialization")
        path = out_dir / "iterations.svg"
        _save(fig, path)
        written.append(path)

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.bar(names, [algos[n]["mean_time_ratio_detected_vs_random"] for n in names],
               color="tab:green")
        ax.axhline(1.0, color="gray", linewidth=0.8, linestyle="--")
        ax.set_ylabel("time(detected) / time(random)")
        ax.set_title("Execution-time ratio, detected vs random init")
        path = out_dir / "time_ratio.svg"
        _save(fig, path)
        written.append(path)
    return written


def render_timing_chart(rows: list[dict], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not rows:
        return []
    ns = [row["n"] for row in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, [row["t_detect_total_s"] for row in rows], marker="o",
            label="detector pipeline")
    for key in rows[0]:
        if key.startswith("t_sweep_"):
            kind = key[len("t_sweep_"):-2]
            ax.plot(ns, [row[key] for row in rows], marker="s",
                    label=f"{kind} sweep")
    ax.set_xlabel("points")
    ax.set_ylabel("seconds")
    ax.set_title("Execution time vs dataset size")
    ax.legend()
    path = out_dir / "time_scaling.svg"
    _save(fig, path)
    return [path]
