"""Internal cluster validity indices and the k-sweep estimator.

Index definitions, with c_i the provided centroids, s_i the mean member
distance to c_i, and SSE_i the within-cluster sum of squares:

  BIC / AIC   penalized spherical-mixture log-likelihood; per-cluster
              variance MLE sigma_i^2 = SSE_i / (d * n_i), mixing weight
              n_i / n, and p = 4k - 1 free parameters in 2D.
  Dunn        min inter-cluster point distance / max cluster diameter.
  DB          mean over i of max_{j!=i} (s_i + s_j) / |c_i - c_j|.
  Silhouette  mean of (b - a) / max(a, b); singleton members score 0.
  CH          [B / (k-1)] / [W / (n-k)] with B the size-weighted squared
              centroid spread around the data mean and W the total SSE.
  Gap         mean_b ln(W_ref_b) - ln(W_data) over uniform-box reference
              draws, with the standard-error selection rule.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import kernels
from .clustering import ClusteringResult, InitSpec, kmeans
from .errors import DegenerateDataError, IndexUndefinedError, SweepFailedError
from .seeds import derive_seed, rng_for


class SelectionRule(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"
    GAP_RULE = "gap_rule"


class IndexKind(str, Enum):
    BIC = "bic"
    AIC = "aic"
    DUNN = "dunn"
    DAVIES_BOULDIN = "db"
    SILHOUETTE = "sw"
    CALINSKI_HARABASZ = "ch"
    GAP_STATISTIC = "gap"

    @property
    def selection_rule(self) -> SelectionRule:
        return _RULES[self]

    @property
    def sweep_start(self) -> int:
        """Smallest k the index is defined for."""
        return 1 if self in (IndexKind.BIC, IndexKind.AIC, IndexKind.GAP_STATISTIC) else 2


_RULES = {
    IndexKind.BIC: SelectionRule.MINIMIZE,
    IndexKind.AIC: SelectionRule.MINIMIZE,
    IndexKind.DUNN: SelectionRule.MAXIMIZE,
    IndexKind.DAVIES_BOULDIN: SelectionRule.MINIMIZE,
    IndexKind.SILHOUETTE: SelectionRule.MAXIMIZE,
    IndexKind.CALINSKI_HARABASZ: SelectionRule.MAXIMIZE,
    IndexKind.GAP_STATISTIC: SelectionRule.GAP_RULE,
}


@dataclass
class IndexReport:
    kind: IndexKind
    values: dict[int, float]
    k_selected: int
    elapsed_seconds: float

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "values": {str(k): float(v) for k, v in sorted(self.values.items())},
            "k_selected": int(self.k_selected),
            "elapsed_seconds": float(self.elapsed_seconds),
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


def _validate_partition(points, assignments, centroids):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    labs = np.ascontiguousarray(assignments, dtype=np.int64)
    cents = np.asarray(centroids, dtype=np.float64)
    k = cents.shape[0]
    if labs.shape[0] != pts.shape[0]:
        raise ValueError("assignments length mismatch")
    if k < 1 or labs.min() < 0 or labs.max() >= k:
        raise ValueError("assignment ids outside [0, k)")
    return pts, labs, cents, k


def _cluster_stats(pts, labs, cents, k):
    counts = np.bincount(labs, minlength=k)
    sse = np.zeros(k)
    np.add.at(sse, labs, ((pts - cents[labs]) ** 2).sum(axis=1))
    return counts, sse


def _spherical_loglik(pts, labs, cents, k) -> float:
    n, d = pts.shape
    counts, sse = _cluster_stats(pts, labs, cents, k)
    if (counts == 0).any():
        raise IndexUndefinedError("index undefined for k: empty cluster")
    variances = sse / (d * counts)
    if (variances <= 0).any():
        raise IndexUndefinedError("index undefined for k: zero-variance cluster")
    ll = 0.0
    for i in range(k):
        ll += (counts[i] * np.log(counts[i] / n)
               - counts[i] * (d / 2) * np.log(2 * np.pi * variances[i])
               - d * counts[i] / 2)
    return float(ll)


def _bic(pts, labs, cents, k):
    p = 4 * k - 1
    return -2 * _spherical_loglik(pts, labs, cents, k) + p * np.log(pts.shape[0])


def _aic(pts, labs, cents, k):
    p = 4 * k - 1
    return -2 * _spherical_loglik(pts, labs, cents, k) + 2 * p


def _dunn(pts, labs, cents, k):
    if k < 2:
        raise IndexUndefinedError("index undefined for k: needs k >= 2")
    min_inter, max_intra = kernels.pair_extremes(pts, labs)
    if max_intra == 0:
        raise IndexUndefinedError("index undefined for k: zero diameter")
    return float(min_inter / max_intra)


def _davies_bouldin(pts, labs, cents, k):
    if k < 2:
        raise IndexUndefinedError("index undefined for k: needs k >= 2")
    counts, _ = _cluster_stats(pts, labs, cents, k)
    if (counts == 0).any():
        raise IndexUndefinedError("index undefined for k: empty cluster")
    scatter = np.zeros(k)
    dists = np.sqrt(((pts - cents[labs]) ** 2).sum(axis=1))
    np.add.at(scatter, labs, dists)
    scatter /= counts
    centroid_dist = np.sqrt(((cents[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2))
    total = 0.0
    for i in range(k):
        ratios = [(scatter[i] + scatter[j]) / centroid_dist[i, j]
                  for j in range(k) if j != i and centroid_dist[i, j] > 0]
        if len(ratios) < k - 1:
            raise IndexUndefinedError("index undefined for k: coincident centroids")
        total += max(ratios)
    return float(total / k)


def _silhouette(pts, labs, cents, k):
    if k < 2:
        raise IndexUndefinedError("index undefined for k: needs k >= 2")
    n = pts.shape[0]
    counts = np.bincount(labs, minlength=k)
    sums = kernels.label_distance_sums(pts, labs, k)
    own = counts[labs]
    scores = np.zeros(n)
    valid = own > 1
    a = np.zeros(n)
    a[valid] = sums[np.arange(n), labs][valid] / (own[valid] - 1)
    other = sums / np.maximum(counts, 1)[None, :]
    other[np.arange(n), labs] = np.inf
    other[:, counts == 0] = np.inf
    b = other.min(axis=1)
    denom = np.maximum(a, b)
    ok = valid & (denom > 0) & np.isfinite(b)
    scores[ok] = (b[ok] - a[ok]) / denom[ok]
    return float(scores.mean())


def _calinski_harabasz(pts, labs, cents, k):
    n = pts.shape[0]
    if k < 2 or n <= k:
        raise IndexUndefinedError("index undefined for k: needs 2 <= k < n")
    counts, sse = _cluster_stats(pts, labs, cents, k)
    w = sse.sum()
    if w <= 0:
        raise IndexUndefinedError("index undefined for k: zero dispersion")
    mean = pts.mean(axis=0)
    b = float((counts * ((cents - mean) ** 2).sum(axis=1)).sum())
    return float((b / (k - 1)) / (w / (n - k)))


_SCORERS = {
    IndexKind.BIC: _bic,
    IndexKind.AIC: _aic,
    IndexKind.DUNN: _dunn,
    IndexKind.DAVIES_BOULDIN: _davies_bouldin,
    IndexKind.SILHOUETTE: _silhouette,
    IndexKind.CALINSKI_HARABASZ: _calinski_harabasz,
}


def score(kind: IndexKind, points, assignments, centroids) -> float:
    """Score one partition; raises IndexUndefinedError where singular."""
    if kind is IndexKind.GAP_STATISTIC:
        raise ValueError("gap statistic needs gap_statistic(), not score()")
    pts, labs, cents, k = _validate_partition(points, assignments, centroids)
    return float(_SCORERS[kind](pts, labs, cents, k))


def default_sweep_clusterer(points, k: int, seed: int) -> ClusteringResult:
    """k-means++ with 5 restarts, best by inertia; the sweep baseline."""
    best = None
    for restart in range(5):
        res = kmeans(points, InitSpec.plusplus(k, derive_seed(seed, restart)))
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def gap_statistic(points, k: int, clusterer=default_sweep_clusterer,
                  b_refs: int = 10, seed: int = 0) -> tuple[float, float]:
    """Gap value and standard error at one k."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    result = clusterer(pts, k, derive_seed(seed, 0))
    w_data = result.inertia
    if w_data <= 0:
        raise DegenerateDataError("degenerate dispersion")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    log_w_refs = np.empty(b_refs)
    for b in range(b_refs):
        ref = rng_for(seed, b + 1).uniform(lo, hi, size=pts.shape)
        w_ref = clusterer(ref, k, derive_seed(seed, b + 1, 1)).inertia
        if w_ref <= 0:
            raise DegenerateDataError("degenerate dispersion")
        log_w_refs[b] = np.log(w_ref)
    gap = float(log_w_refs.mean() - np.log(w_data))
    std_err = float(log_w_refs.std(ddof=0) * np.sqrt(1 + 1 / b_refs))
    return gap, std_err


def estimate_k(points, kind: IndexKind, k_max: int,
               clusterer=default_sweep_clusterer, seed: int = 0,
               b_refs: int = 10) -> IndexReport:
    """Sweep k and select per the index's rule; ties go to the smaller k."""
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    pts = np.ascontiguousarray(points, dtype=np.float64)
    values: dict[int, float] = {}
    std_errs: dict[int, float] = {}
    total = 0.0
    for k in range(kind.sweep_start, k_max + 1):
        t0 = time.perf_counter()
        try:
            if kind is IndexKind.GAP_STATISTIC:
                gap, se = gap_statistic(pts, k, clusterer, b_refs, derive_seed(seed, k))
                values[k] = gap
                std_errs[k] = se
            else:
                result = clusterer(pts, k, derive_seed(seed, k))
                values[k] = score(kind, pts, result.assignments, result.centroids)
        except (IndexUndefinedError, DegenerateDataError):
            continue
        finally:
            total += time.perf_counter() - t0
    if not values:
        raise SweepFailedError("sweep failed")

    ks = sorted(values)
    rule = kind.selection_rule
    if rule is SelectionRule.GAP_RULE:
        k_selected = ks[-1]
        for k in ks:
            if k + 1 in values and values[k] >= values[k + 1] - std_errs[k + 1]:
                k_selected = k
                break
    else:
        sign = 1.0 if rule is SelectionRule.MINIMIZE else -1.0
        k_selected = ks[0]
        best = sign * values[ks[0]]
        for k in ks[1:]:
            if sign * values[k] < best:
                best = sign * values[k]
                k_selected = k
    return IndexReport(kind=kind, values=values, k_selected=k_selected,
                       elapsed_seconds=total)


def parse_index_kinds(text: str) -> list[IndexKind]:
    """Parse a comma-separated list like "bic,aic,ch" into IndexKinds."""
    kinds = []
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        try:
            kinds.append(IndexKind(token))
        except ValueError:
            valid = ", ".join(k.value for k in IndexKind)
            raise ValueError(f"unknown index {token!r} (valid: {valid})") from None
    return kinds
