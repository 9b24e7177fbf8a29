"""Seeded synthetic 2D cluster datasets in six shape families.

Blob-style families place centers uniformly in [0, 100]^2 with rejection
sampling on a minimum pairwise separation measured in units of the larger
cluster standard deviation. Moons and circles use the classical
two-component constructions at unit scale; raster bounds adapt to the
data, so absolute scale is irrelevant downstream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InfeasibleSeparationError, InvalidConfigError
from .seeds import derive_seed, rng_for

CENTER_BOX = (0.0, 100.0)
_MAX_CENTER_ATTEMPTS = 10000
# RandomProportions: half of the mass split equally, half by Dirichlet(3).
_PROPORTION_FLOOR = 0.5
_DIRICHLET_ALPHA = 3.0


class ShapeFamily(str, Enum):
    GAUSSIAN_BLOBS = "gaussian_blobs"
    VARIED_VARIANCE_BLOBS = "varied_variance_blobs"
    ANISOTROPIC = "anisotropic"
    NOISY_MOONS = "noisy_moons"
    NOISY_CIRCLES = "noisy_circles"
    NO_STRUCTURE = "no_structure"


class Balance(str, Enum):
    EQUAL = "equal"
    RANDOM_PROPORTIONS = "random_proportions"


BLOB_FAMILIES = (
    ShapeFamily.GAUSSIAN_BLOBS,
    ShapeFamily.VARIED_VARIANCE_BLOBS,
    ShapeFamily.ANISOTROPIC,
)

_FIXED_K = {
    ShapeFamily.NOISY_MOONS: 2,
    ShapeFamily.NOISY_CIRCLES: 2,
    ShapeFamily.NO_STRUCTURE: 1,
}


@dataclass(frozen=True)
class GeneratorConfig:
    shape_family: ShapeFamily = ShapeFamily.GAUSSIAN_BLOBS
    k: int = 3
    n_total: int = 20000
    variance_range: tuple[float, float] = (1.0, 2.5)
    separation_min: float = 8.0
    balance: Balance = Balance.EQUAL
    noise_level: float = 0.05
    seed: int = 0

    def effective_k(self) -> int:
        return _FIXED_K.get(self.shape_family, self.k)

    def validate(self) -> None:
        k = self.effective_k()
        if self.k < 1 or self.n_total < k:
            raise InvalidConfigError("invalid config: k < 1 or n_total < k")
        if self.shape_family in BLOB_FAMILIES and not (2 <= self.k <= 12):
            raise InvalidConfigError("invalid config: k outside [2, 12] for blob families")
        lo, hi = self.variance_range
        if not (0 < lo <= hi):
            raise InvalidConfigError("invalid config: bad variance_range")
        if self.separation_min < 0:
            raise InvalidConfigError("invalid config: negative separation_min")
        if not (0 <= self.noise_level < 1):
            raise InvalidConfigError("invalid config: noise_level outside [0, 1)")

    def to_json_dict(self) -> dict:
        return {
            "shape_family": self.shape_family.value,
            "k": self.k,
            "n_total": self.n_total,
            "variance_range": list(self.variance_range),
            "separation_min": self.separation_min,
            "balance": self.balance.value,
            "noise_level": self.noise_level,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(
            shape_family=ShapeFamily(d["shape_family"]),
            k=int(d["k"]),
            n_total=int(d["n_total"]),
            variance_range=(float(d["variance_range"][0]), float(d["variance_range"][1])),
            separation_min=float(d["separation_min"]),
            balance=Balance(d["balance"]),
            noise_level=float(d["noise_level"]),
            seed=int(d["seed"]),
        )


@dataclass
class Dataset2D:
    points: np.ndarray          # (n, 2) float64
    labels: np.ndarray          # (n,) int64 in [0, k_true)
    centroids_true: np.ndarray  # (k_true, 2) float64
    k_true: int
    config: GeneratorConfig
    dataset_id: str = ""

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        self.centroids_true = np.asarray(self.centroids_true, dtype=np.float64)


def _cluster_counts(k: int, n_total: int, balance: Balance, rng: np.random.Generator) -> np.ndarray:
    if balance is Balance.EQUAL:
        base, rem = divmod(n_total, k)
        counts = np.full(k, base, dtype=np.int64)
        counts[:rem] += 1
        return counts
    raw = rng.dirichlet(np.full(k, _DIRICHLET_ALPHA))
    props = _PROPORTION_FLOOR / k + (1.0 - _PROPORTION_FLOOR) * raw
    # largest-remainder rounding to exactly n_total, at least 1 point each
    scaled = props * n_total
    counts = np.floor(scaled).astype(np.int64)
    counts = np.maximum(counts, 1)
    while counts.sum() > n_total:
        counts[int(np.argmax(counts))] -= 1
    remainder = n_total - counts.sum()
    if remainder > 0:
        order = np.argsort(-(scaled - np.floor(scaled)))
        for i in range(remainder):
            counts[order[i % k]] += 1
    return counts


def _sample_centers(k: int, min_dists: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform centers in CENTER_BOX with pairwise distance >= min_dists[i, j]."""
    lo, hi = CENTER_BOX
    centers = np.empty((k, 2))
    attempts = 0
    placed = 0
    while placed < k:
        if attempts >= _MAX_CENTER_ATTEMPTS:
            raise InfeasibleSeparationError("infeasible separation")
        candidate = rng.uniform(lo, hi, size=2)
        attempts += 1
        ok = True
        for j in range(placed):
            if np.hypot(*(candidate - centers[j])) < min_dists[placed, j]:
                ok = False
                break
        if ok:
            centers[placed] = candidate
            placed += 1
    return centers


def _random_linear_map(rng: np.random.Generator) -> np.ndarray:
    """Rotation * diag(s1, s2) * rotation with determinant inside [0.3, 1.7]."""
    def rot(theta):
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[c, -s], [s, c]])

    s = rng.uniform(0.75, 1.25, size=2)
    t = rot(rng.uniform(0, 2 * np.pi)) @ np.diag(s) @ rot(rng.uniform(0, 2 * np.pi))
    assert 0.3 <= abs(np.linalg.det(t)) <= 1.7
    return t


def _generate_blobs(config: GeneratorConfig, rng: np.random.Generator):
    k = config.k
    lo, hi = config.variance_range
    if config.shape_family is ShapeFamily.VARIED_VARIANCE_BLOBS:
        sigmas = rng.uniform(lo, hi, size=k)
    else:
        sigmas = np.full(k, rng.uniform(lo, hi))
    min_dists = config.separation_min * np.maximum.outer(sigmas, sigmas)
    centers = _sample_centers(k, min_dists, rng)
    counts = _cluster_counts(k, config.n_total, config.balance, rng)

    points = np.empty((config.n_total, 2))
    labels = np.empty(config.n_total, dtype=np.int64)
    pos = 0
    for i in range(k):
        c = counts[i]
        points[pos:pos + c] = centers[i] + rng.normal(0.0, sigmas[i], size=(c, 2))
        labels[pos:pos + c] = i
        pos += c

    if config.shape_family is ShapeFamily.ANISOTROPIC:
        transform = _random_linear_map(rng)
        points = points @ transform
        centers = centers @ transform

    return points, labels, centers


def _generate_two_component(config: GeneratorConfig, rng: np.random.Generator):
    counts = _cluster_counts(2, config.n_total, config.balance, rng)
    n0, n1 = int(counts[0]), int(counts[1])
    if config.shape_family is ShapeFamily.NOISY_MOONS:
        t0 = rng.uniform(0, np.pi, n0)
        t1 = rng.uniform(0, np.pi, n1)
        first = np.column_stack([np.cos(t0), np.sin(t0)])
        second = np.column_stack([1 - np.cos(t1), 1 - np.sin(t1) - 0.5])
    else:
        t0 = rng.uniform(0, 2 * np.pi, n0)
        t1 = rng.uniform(0, 2 * np.pi, n1)
        first = np.column_stack([np.cos(t0), np.sin(t0)])
        second = 0.5 * np.column_stack([np.cos(t1), np.sin(t1)])
    points = np.vstack([first, second])
    if config.noise_level > 0:
        points = points + rng.normal(0.0, config.noise_level, size=points.shape)
    labels = np.repeat(np.array([0, 1], dtype=np.int64), [n0, n1])
    centroids = np.vstack([points[:n0].mean(axis=0), points[n0:].mean(axis=0)])
    return points, labels, centroids


def generate(config: GeneratorConfig) -> Dataset2D:
    """Generate one labeled dataset; bitwise deterministic for a fixed config."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    family = config.shape_family

    if family in BLOB_FAMILIES:
        points, labels, centroids = _generate_blobs(config, rng)
    elif family in (ShapeFamily.NOISY_MOONS, ShapeFamily.NOISY_CIRCLES):
        points, labels, centroids = _generate_two_component(config, rng)
    else:
        lo, hi = CENTER_BOX
        points = rng.uniform(lo, hi, size=(config.n_total, 2))
        labels = np.zeros(config.n_total, dtype=np.int64)
        centroids = np.array([[(lo + hi) / 2, (lo + hi) / 2]])

    return Dataset2D(points=points, labels=labels, centroids_true=centroids,
                     k_true=config.effective_k(), config=config)


@dataclass
class SuiteSpec:
    """Random draw ranges used by generate_suite for each dataset."""
    family_mix: dict[ShapeFamily, float] = field(
        default_factory=lambda: {f: 1.0 for f in ShapeFamily})
    k_range: tuple[int, int] = (2, 12)
    n_range: tuple[int, int] = (20000, 50000)
    sigma_span: tuple[float, float] = (1.0, 2.5)
    separation_min: float = 8.0
    balance_choices: tuple[Balance, ...] = (Balance.EQUAL, Balance.RANDOM_PROPORTIONS)
    noise_range: tuple[float, float] = (0.02, 0.08)


def config_for_suite_index(master_seed: int, index: int, spec: SuiteSpec) -> GeneratorConfig:
    """Draw dataset #index's configuration from its own derived stream."""
    rng = rng_for(master_seed, index)
    families = sorted(spec.family_mix, key=lambda f: f.value)
    weights = np.array([spec.family_mix[f] for f in families], dtype=np.float64)
    family = families[rng.choice(len(families), p=weights / weights.sum())]
    k = int(rng.integers(spec.k_range[0], spec.k_range[1] + 1))
    n = int(rng.integers(spec.n_range[0], spec.n_range[1] + 1))
    lo = rng.uniform(*spec.sigma_span)
    hi = rng.uniform(lo, spec.sigma_span[1])
    balance = spec.balance_choices[rng.choice(len(spec.balance_choices))]
    noise = float(rng.uniform(*spec.noise_range))
    return GeneratorConfig(
        shape_family=family, k=k, n_total=n, variance_range=(lo, hi),
        separation_min=spec.separation_min, balance=balance, noise_level=noise,
        seed=derive_seed(master_seed, index, 1),
    )


def generate_suite(count: int, master_seed: int,
                   family_mix: dict[ShapeFamily, float] | None = None,
                   spec: SuiteSpec | None = None) -> list[Dataset2D]:
    """Generate count datasets with per-index derived seeds (order independent)."""
    if count < 1:
        raise InvalidConfigError("invalid config: count < 1")
    spec = spec or SuiteSpec()
    if family_mix is not None:
        spec = replace(spec, family_mix=dict(family_mix))
    datasets = []
    for i in range(count):
        ds = generate(config_for_suite_index(master_seed, i, spec))
        ds.dataset_id = f"ds_{i:04d}"
        datasets.append(ds)
    return datasets


# ---------------------------------------------------------------------------
# Dataset directory format: points.csv (x,y,label) + meta.json


def save_dataset(ds: Dataset2D, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "points.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "label"])
        for (x, y), lab in zip(ds.points, ds.labels):
            writer.writerow([repr(float(x)), repr(float(y)), int(lab)])
    meta = {
        "k_true": int(ds.k_true),
        "centroids_true": [[float(a), float(b)] for a, b in ds.centroids_true],
        "config": ds.config.to_json_dict(),
        "dataset_id": ds.dataset_id,
    }
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
    return directory


def load_dataset(directory: str | Path) -> Dataset2D:
    directory = Path(directory)
    with open(directory / "meta.json") as fh:
        meta = json.load(fh)
    xs, ys, labs = [], [], []
    with open(directory / "points.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
            labs.append(int(row[2]))
    return Dataset2D(
        points=np.column_stack([xs, ys]),
        labels=np.array(labs, dtype=np.int64),
        centroids_true=np.array(meta["centroids_true"], dtype=np.float64),
        k_true=int(meta["k_true"]),
        config=GeneratorConfig.from_json_dict(meta["config"]),
        dataset_id=meta.get("dataset_id", directory.name),
    )
