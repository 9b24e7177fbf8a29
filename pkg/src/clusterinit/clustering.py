"""Partitional clustering algorithms with pluggable initialization.

All algorithms accept an InitSpec so detected initialization parameters,
random seeding, k-means++ seeding, and explicit centroids run through
one code path. Iteration counters start at 1 for the first
assignment-update round; convergence is max centroid displacement below
tol (k-means, RFCM) or mean log-likelihood improvement below tol (GMM).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels
from .detector import InitParams
from .errors import ClusterInitError, DegenerateDataError, IndexUndefinedError
from .seeds import derive_seed


@dataclass(frozen=True)
class InitSpec:
    variant: str                            # random | plusplus | detected | explicit
    k: int | None = None
    seed: int | None = None
    params: InitParams | None = None
    centroids: np.ndarray | None = None

    @classmethod
    def random(cls, k: int, seed: int) -> "InitSpec":
        return cls(variant="random", k=k, seed=seed)

    @classmethod
    def plusplus(cls, k: int, seed: int) -> "InitSpec":
        return cls(variant="plusplus", k=k, seed=seed)

    @classmethod
    def detected(cls, params: InitParams) -> "InitSpec":
        return cls(variant="detected", params=params)

    @classmethod
    def explicit(cls, centroids) -> "InitSpec":
        return cls(variant="explicit",
                   centroids=np.asarray(centroids, dtype=np.float64))


@dataclass
class ClusteringResult:
    assignments: np.ndarray   # (n,) int64
    centroids: np.ndarray     # (k, 2)
    iterations: int
    converged: bool
    inertia: float
    elapsed_seconds: float
    inertia_history: list[float] = field(default_factory=list)
    loglik_history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "assignments": [int(a) for a in self.assignments],
            "centroids": [[float(x), float(y)] for x, y in self.centroids],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "inertia": float(self.inertia),
            "elapsed_seconds": float(self.elapsed_seconds),
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


def kmeans_plusplus_centroids(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Squared-distance-weighted seeding."""
    rng = np.random.default_rng(seed)
    n = points.shape[0]
    centroids = np.empty((k, 2))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total == 0:
            centroids[i] = points[rng.integers(n)]
        else:
            centroids[i] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def resolve_init(init: InitSpec, points: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Materialize starting centroids (and optional weights) for a dataset.

    A detected init with k=0 falls back to a single centroid at the
    global mean so pathological inputs degrade instead of raising.
    """
    n = points.shape[0]
    weights = None
    if init.variant == "random":
        rng = np.random.default_rng(init.seed)
        centroids = points[rng.choice(n, size=init.k, replace=False)].copy()
    elif init.variant == "plusplus":
        centroids = kmeans_plusplus_centroids(points, init.k, init.seed)
    elif init.variant == "detected":
        params = init.params
        if params is None or params.k == 0:
            centroids = points.mean(axis=0, keepdims=True).copy()
        else:
            centroids = np.asarray(params.centroids, dtype=np.float64).copy()
            total = params.size_estimates.sum()
            if total > 0:
                weights = params.size_estimates / total
    elif init.variant == "explicit":
        centroids = np.asarray(init.centroids, dtype=np.float64).copy()
    else:
        raise ValueError(f"unknown init variant {init.variant!r}")
    if centroids.shape[0] < 1:
        raise ValueError("init produced no centroids")
    return np.ascontiguousarray(centroids), weights


def _as_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (n, 2)")
    return pts


def _repair_empty_clusters(points, centroids, labels, counts):
    """Reseed each empty cluster at the point farthest from its centroid."""
    taken: set[int] = set()
    for j in np.flatnonzero(counts == 0):
        dist = ((points - centroids[j]) ** 2).sum(axis=1)
        for idx in np.argsort(-dist):
            idx = int(idx)
            if idx not in taken and counts[labels[idx]] > 1:
                break
        else:
            continue
        counts[labels[idx]] -= 1
        labels[idx] = j
        counts[j] = 1
        centroids[j] = points[idx]
        taken.add(idx)


def kmeans(points, init: InitSpec, max_iter: int = 300, tol: float = 1e-6) -> ClusteringResult:
    """Lloyd iterations with farthest-point repair of empty clusters."""
    pts = _as_points(points)
    t0 = time.perf_counter()
    centroids, _ = resolve_init(init, pts)
    k = centroids.shape[0]
    if k > pts.shape[0]:
        raise ClusterInitError("more clusters than points")

    history: list[float] = []
    labels = np.zeros(pts.shape[0], dtype=np.int64)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        labels, _ = kernels.assign_points(pts, centroids)
        counts = np.bincount(labels, minlength=k)
        if (counts == 0).any():
            _repair_empty_clusters(pts, centroids, labels, counts)
        sums = np.zeros((k, 2))
        np.add.at(sums, labels, pts)
        new_centroids = sums / counts[:, None]
        displacement = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        history.append(float(((pts - centroids[labels]) ** 2).sum()))
        if displacement < tol:
            converged = True
            break

    return ClusteringResult(
        assignments=labels, centroids=centroids, iterations=iterations,
        converged=converged, inertia=history[-1],
        elapsed_seconds=time.perf_counter() - t0, inertia_history=history)


def xmeans(points, k_min: int = 1, k_max: int = 20, seed: int = 0,
           max_iter: int = 300, tol: float = 1e-6,
           split_restarts: int = 5) -> ClusteringResult:
    """Grow k by BIC-scored 2-means splits, then polish with global k-means.

    Each trial split runs several seeded 2-means candidates and keeps the
    one with the best child BIC: the SSE-optimal balanced split of a
    multi-blob cluster often leaves the spherical variance untouched
    (rejected), while a peel-one-blob candidate is accepted decisively.
    """
    from .indices import IndexKind, score  # local import to avoid a cycle

    pts = _as_points(points)
    if not (1 <= k_min <= k_max <= pts.shape[0]):
        raise ClusterInitError("more clusters than points")
    t0 = time.perf_counter()

    def bic_of(subset, labels, centroids):
        try:
            return score(IndexKind.BIC, subset, labels, centroids)
        except IndexUndefinedError:
            return None

    base = kmeans(pts, InitSpec.plusplus(k_min, derive_seed(seed, 0)),
                  max_iter=max_iter, tol=tol)
    centroids = [c for c in base.centroids]
    labels = base.assignments.copy()

    improved = True
    round_no = 0
    while improved and len(centroids) < k_max:
        improved = False
        round_no += 1
        for j in range(len(centroids)):
            if len(centroids) >= k_max:
                break
            members = np.flatnonzero(labels == j)
            if members.size < 4:
                continue
            subset = pts[members]
            parent_bic = bic_of(subset, np.zeros(members.size, dtype=np.int64),
                                centroids[j][None, :])
            if parent_bic is None:
                continue
            best_split = None
            best_bic = parent_bic
            for restart in range(split_restarts):
                split = kmeans(subset,
                               InitSpec.plusplus(2, derive_seed(seed, round_no, j, restart)),
                               max_iter=max_iter, tol=tol)
                child_bic = bic_of(subset, split.assignments, split.centroids)
                if child_bic is not None and child_bic < best_bic:
                    best_bic = child_bic
                    best_split = split
            if best_split is None:
                continue
            # accept: cluster j becomes child 0, child 1 is appended
            centroids[j] = best_split.centroids[0]
            centroids.append(best_split.centroids[1])
            labels[members[best_split.assignments == 1]] = len(centroids) - 1
            improved = True

    polish = kmeans(pts, InitSpec.explicit(np.vstack(centroids)),
                    max_iter=max_iter, tol=tol)
    polish.elapsed_seconds = time.perf_counter() - t0
    return polish


def rfcm(points, init: InitSpec, fuzzifier_m: float = 2.0,
         delta_threshold: float = 0.95, w_lower: float = 0.95,
         max_iter: int = 100, tol: float = 1e-5) -> ClusteringResult:
    """Rough-fuzzy c-means.

    A point is a certain (lower-approximation) member of its best cluster
    when the runner-up membership is below delta_threshold times the top
    one; otherwise it is boundary for every cluster within that ratio.
    Centroids blend the lower mean with the u^m-weighted boundary mean by
    w_lower; a side with no members cedes its whole weight to the other.
    """
    pts = _as_points(points)
    t0 = time.perf_counter()
    centroids, _ = resolve_init(init, pts)
    k = centroids.shape[0]
    if k > pts.shape[0]:
        raise ClusterInitError("more clusters than points")

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u = kernels.fcm_memberships(pts, centroids, fuzzifier_m)
        best = np.argmax(u, axis=1)
        u_top = u[np.arange(len(pts)), best]
        second = u.copy()
        second[np.arange(len(pts)), best] = -np.inf
        u_second = second.max(axis=1)
        crisp = u_second < delta_threshold * u_top

        um = u ** fuzzifier_m
        new_centroids = np.empty_like(centroids)
        for i in range(k):
            lower = crisp & (best == i)
            boundary = ~crisp & (u[:, i] >= delta_threshold * u_top)
            n_lower = int(lower.sum())
            w_bnd = um[boundary, i]
            has_boundary = w_bnd.sum() > 0
            if n_lower and has_boundary:
                lower_mean = pts[lower].mean(axis=0)
                bnd_mean = (pts[boundary] * w_bnd[:, None]).sum(axis=0) / w_bnd.sum()
                new_centroids[i] = w_lower * lower_mean + (1 - w_lower) * bnd_mean
            elif n_lower:
                new_centroids[i] = pts[lower].mean(axis=0)
            elif has_boundary:
                new_centroids[i] = (pts[boundary] * w_bnd[:, None]).sum(axis=0) / w_bnd.sum()
            else:
                new_centroids[i] = centroids[i]
        displacement = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if displacement < tol:
            converged = True
            break

    u = kernels.fcm_memberships(pts, centroids, fuzzifier_m)
    assignments = np.argmax(u, axis=1).astype(np.int64)
    inertia = float(((pts - centroids[assignments]) ** 2).sum())
    return ClusteringResult(
        assignments=assignments, centroids=centroids, iterations=iterations,
        converged=converged, inertia=inertia,
        elapsed_seconds=time.perf_counter() - t0)


def _estep(pts, weights, means, covs):
    """Log responsibilities and mean per-point log-likelihood."""
    n = pts.shape[0]
    k = means.shape[0]
    log_prob = np.empty((n, k))
    for i in range(k):
        try:
            chol = np.linalg.cholesky(covs[i])
        except np.linalg.LinAlgError as exc:
            raise DegenerateDataError("degenerate component") from exc
        diff = (pts - means[i]).T
        z = solve_triangular(chol, diff, lower=True)
        log_det = np.log(np.diag(chol)).sum()
        log_prob[:, i] = (-0.5 * (z ** 2).sum(axis=0) - log_det
                          - np.log(2 * np.pi) + np.log(weights[i]))
    top = log_prob.max(axis=1, keepdims=True)
    log_norm = top + np.log(np.exp(log_prob - top).sum(axis=1, keepdims=True))
    return log_prob - log_norm, float(log_norm.mean())


def gmm_em(points, init: InitSpec, covariance: str = "full", max_iter: int = 200,
           tol: float = 1e-6, reg: float = 1e-6) -> ClusteringResult:
    """EM for a k-component 2D Gaussian mixture.

    covariance: "spherical", "diag", or "full". Detected inits seed the
    mixing weights from size estimates. Inertia is reported as the SSE
    of hard assignments to the component means for comparability with
    the other algorithms.
    """
    if covariance not in ("spherical", "diag", "full"):
        raise ValueError(f"unknown covariance type {covariance!r}")
    pts = _as_points(points)
    t0 = time.perf_counter()
    means, weight_hint = resolve_init(init, pts)
    k = means.shape[0]
    n = pts.shape[0]
    if k > n:
        raise ClusterInitError("more clusters than points")

    weights = (weight_hint if weight_hint is not None and weight_hint.shape[0] == k
               else np.full(k, 1.0 / k))
    weights = np.clip(weights, 1e-12, None)
    weights = weights / weights.sum()
    pooled = np.cov(pts.T) + reg * np.eye(2)
    covs = np.repeat(pooled[None, :, :], k, axis=0)

    loglik_history: list[float] = []
    converged = False
    iterations = 0
    log_resp = None
    for iterations in range(1, max_iter + 1):
        log_resp, mean_ll = _estep(pts, weights, means, covs)
        loglik_history.append(mean_ll)
        resp = np.exp(log_resp)
        nk = resp.sum(axis=0) + 1e-300
        weights = nk / n
        means = (resp.T @ pts) / nk[:, None]
        for i in range(k):
            diff = pts - means[i]
            cov = (resp[:, i][:, None] * diff).T @ diff / nk[i]
            if covariance == "diag":
                cov = np.diag(np.diag(cov))
            elif covariance == "spherical":
                cov = np.eye(2) * (np.trace(cov) / 2)
            covs[i] = cov + reg * np.eye(2)
        if len(loglik_history) >= 2 and \
                loglik_history[-1] - loglik_history[-2] < tol:
            converged = True
            break

    log_resp, _ = _estep(pts, weights, means, covs)
    assignments = np.argmax(log_resp, axis=1).astype(np.int64)
    inertia = float(((pts - means[assignments]) ** 2).sum())
    return ClusteringResult(
        assignments=assignments, centroids=means, iterations=iterations,
        converged=converged, inertia=inertia,
        elapsed_seconds=time.perf_counter() - t0, loglik_history=loglik_history)


ALGORITHMS = {
    "kmeans": kmeans,
    "rfcm": rfcm,
    "gmm": gmm_em,
}
