"""Clustering from pairwise and triple-wise distance tensors.

Pairwise distances feed a random-walk spectral clusterer; triple-wise
distances feed two hypergraph methods: TTM's tensor contraction and the
normalized hypergraph Laplacian behind NH-Cut.  Distances become
affinities through exp(-w/sigma) with sigma the median surviving
weight, so no per-dataset scale knob exists.  All randomness flows
through an explicit generator and runs repeat bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .linalg import eig_symmetric
from .metric_props import SENTINEL, DistanceTensor

__all__ = [
    "Hypergraph3",
    "ClusteringSolution",
    "build_hypergraph",
    "ttm",
    "nhcut",
    "spectral_cluster",
    "kmeans",
    "clustering_error",
    "tune_threshold",
]

KMEANS_MAX_ITER = 300


@dataclass(frozen=True)
class Hypergraph3:
    """3-uniform hypergraph; each hyperedge carries a distance weight."""

    n: int
    hyperedges: tuple[tuple[tuple[int, int, int], float], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one node, got {self.n}")
        seen: set[tuple[int, int, int]] = set()
        for (i, j, k), w in self.hyperedges:
            if not 0 <= i < j < k < self.n:
                raise ValueError(f"hyperedge {(i, j, k)} not strictly increasing in range")
            if (i, j, k) in seen:
                raise ValueError(f"duplicate hyperedge {(i, j, k)}")
            seen.add((i, j, k))
            if not (math.isfinite(w) and w >= 0.0):
                raise ValueError(f"hyperedge {(i, j, k)} has invalid weight {w}")

    @property
    def num_edges(self) -> int:
        return len(self.hyperedges)


@dataclass(frozen=True)
class ClusteringSolution:
    labels: tuple[int, ...]
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        for lab in self.labels:
            if not 0 <= lab < self.k:
                raise ValueError(f"label {lab} outside [0, {self.k})")

    def as_array(self) -> np.ndarray:
        return np.array(self.labels, dtype=int)

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "labels": list(self.labels)}, sort_keys=True)


def build_hypergraph(T: DistanceTensor, threshold: float) -> Hypergraph3:
    """Keep sampled triples whose distance is at most the threshold."""
    if T.order != 3:
        raise ValueError(f"need an order-3 tensor, got order {T.order}")
    edges = tuple(
        (key, T.values[key]) for key in sorted(T.sampled) if T.values[key] <= threshold
    )
    if not edges:
        raise ValueError(f"no hyperedges survive threshold {threshold}")
    return Hypergraph3(T.size, edges)


def _affinities(weights: np.ndarray) -> np.ndarray:
    sigma = float(np.median(weights))
    if sigma <= 0.0:
        # limit of exp(-w/sigma): mass only where the distance vanishes
        return (weights <= 0.0).astype(float)
    return np.exp(-weights / sigma)


def _component_count(mask: np.ndarray) -> int:
    n = mask.shape[0]
    seen = np.zeros(n, dtype=bool)
    count = 0
    for start in range(n):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            u = stack.pop()
            for v in np.nonzero(mask[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
    return count


def _check_support(degrees: np.ndarray, support: np.ndarray, k: int) -> np.ndarray:
    isolated = np.nonzero(degrees <= 0.0)[0]
    if isolated.size:
        raise ValueError(f"isolated vertices: {isolated.tolist()}")
    support = support.copy()
    np.fill_diagonal(support, False)
    c = _component_count(support)
    if c > k:
        raise ValueError(f"affinity graph splits into {c} components, more than k={k}")
    return degrees


def _embed_symmetric(L: np.ndarray, k: int, row_normalize: bool) -> np.ndarray:
    _, vecs = eig_symmetric(L, k=k, which="smallest")
    if row_normalize:
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        vecs = vecs / np.maximum(norms, 1e-300)
    return vecs


def ttm(h: Hypergraph3, k: int, rng: np.random.Generator | None = None) -> ClusteringSolution:
    """Tensor-trace maximization: contract the affinity tensor, then spectral."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    weights = np.array([w for _, w in h.hyperedges])
    aff = _affinities(weights)
    A = np.zeros((h.n, h.n))
    for ((i, j, kk), _), a in zip(h.hyperedges, aff):
        for u, v in ((i, j), (i, kk), (j, kk)):
            A[u, v] += a
            A[v, u] += a
    deg = A.sum(axis=1)
    _check_support(deg, A > 0.0, k)
    dinv = 1.0 / np.sqrt(deg)
    L = np.eye(h.n) - dinv[:, None] * A * dinv[None, :]
    rows = _embed_symmetric(L, k, row_normalize=True)
    return kmeans(rows, k, rng)


def nhcut(h: Hypergraph3, k: int, rng: np.random.Generator | None = None) -> ClusteringSolution:
    """Normalized hypergraph cut via the incidence-based Laplacian."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    m = h.num_edges
    H = np.zeros((h.n, m))
    for col, ((i, j, kk), _) in enumerate(h.hyperedges):
        H[[i, j, kk], col] = 1.0
    w = _affinities(np.array([wt for _, wt in h.hyperedges]))
    dv = H @ w
    co = (H @ H.T) > 0.0
    _check_support(dv, co, k)
    de = H.sum(axis=0)  # 3 per hyperedge
    dinv = 1.0 / np.sqrt(dv)
    inner = (H * (w / de)[None, :]) @ H.T
    L = np.eye(h.n) - dinv[:, None] * inner * dinv[None, :]
    rows = _embed_symmetric(L, k, row_normalize=True)
    return kmeans(rows, k, rng)


def spectral_cluster(D: DistanceTensor, k: int,
                     rng: np.random.Generator | None = None) -> ClusteringSolution:
    """Random-walk spectral clustering on a sampled pairwise tensor.

    Unsampled or sentinel-valued pairs contribute zero affinity.
    """
    if D.order != 2:
        raise ValueError(f"need an order-2 tensor, got order {D.order}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    finite = {key: v for key, v in D.values.items() if key in D.sampled and v < SENTINEL}
    A = np.zeros((D.size, D.size))
    if finite:
        sigma_pool = np.array([v for _, v in sorted(finite.items())])
        aff = _affinities(sigma_pool)
        for (key, _), a in zip(sorted(finite.items()), aff):
            i, j = key
            A[i, j] = A[j, i] = a
    deg = A.sum(axis=1)
    _check_support(deg, A > 0.0, k)
    dinv = 1.0 / np.sqrt(deg)
    L = np.eye(D.size) - dinv[:, None] * A * dinv[None, :]
    vecs = _embed_symmetric(L, k, row_normalize=False)
    # symmetrized eigenvectors map back to the random-walk ones
    return kmeans(dinv[:, None] * vecs, k, rng)


def _kmeanspp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = [points[int(rng.integers(n))]]
    for _ in range(k - 1):
        d2 = np.min(
            ((points[:, None, :] - np.array(centers)[None, :, :]) ** 2).sum(axis=2),
            axis=1,
        )
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(points[idx])
    return np.array(centers)


def _lloyd(points: np.ndarray, centers: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    n = len(points)
    labels = np.full(n, -1)
    for _ in range(KMEANS_MAX_ITER):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        dist_own = d2[np.arange(n), new_labels].copy()
        while True:
            counts = np.bincount(new_labels, minlength=k)
            empty = np.nonzero(counts == 0)[0]
            if empty.size == 0:
                break
            # hand the emptiest cluster the worst-fit point from a
            # cluster that can spare one
            donors = counts[new_labels] >= 2
            far = int(np.nonzero(donors)[0][dist_own[donors].argmax()])
            new_labels[far] = int(empty[0])
            dist_own[far] = 0.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centers = np.array([points[labels == c].mean(axis=0) for c in range(k)])
    inertia = float(((points - centers[labels]) ** 2).sum())
    return labels, inertia


def kmeans(points: np.ndarray, k: int, rng: np.random.Generator | None = None,
           restarts: int = 10) -> ClusteringSolution:
    """Lloyd iterations from k-means++ seeds, best of `restarts` by inertia."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2 or not np.all(np.isfinite(points)):
        raise ValueError("points must be a finite 2-d array")
    n = len(points)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points {n}")
    if rng is None:
        rng = np.random.default_rng()
    best: tuple[float, np.ndarray] | None = None
    for _ in range(restarts):
        labels, inertia = _lloyd(points, _kmeanspp_seed(points, k, rng), k)
        if best is None or inertia < best[0]:
            best = (inertia, labels)
    return ClusteringSolution(labels=tuple(int(c) for c in best[1]), k=k)


def _as_labels(sol) -> tuple[np.ndarray, int]:
    if isinstance(sol, ClusteringSolution):
        return sol.as_array(), sol.k
    arr = np.asarray(sol, dtype=int)
    if arr.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    return arr, int(arr.max()) + 1 if arr.size else 1


def _confusion(pred: np.ndarray, truth: np.ndarray, k: int) -> np.ndarray:
    c = np.zeros((k, k), dtype=int)
    np.add.at(c, (pred, truth), 1)
    return c


def _best_matches_brute(conf: np.ndarray) -> int:
    k = conf.shape[0]
    return max(sum(conf[a, perm[a]] for a in range(k)) for perm in permutations(range(k)))


def _best_matches_hungarian(conf: np.ndarray) -> int:
    rows, cols = linear_sum_assignment(-conf)
    return int(conf[rows, cols].sum())


def clustering_error(pred, truth) -> float:
    """Mismatch fraction minimized over relabelings of the prediction."""
    p, kp = _as_labels(pred)
    t, kt = _as_labels(truth)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty labelings")
    k = max(kp, kt)
    conf = _confusion(p, t, k)
    if k <= 8:
        matched = _best_matches_brute(conf)
    else:
        matched = _best_matches_hungarian(conf)
    return 1.0 - matched / p.size


def tune_threshold(
    T: DistanceTensor,
    truth,
    clusterer: Callable[[DistanceTensor, float], ClusteringSolution],
    grid: Sequence[float] | None = None,
) -> tuple[float, float]:
    """Pick the threshold in the grid that minimizes the clustering error.

    The clusterer is called as clusterer(T, threshold).  Gridpoints where
    it raises (nothing survives, isolated vertices, too few clusters
    reachable) are skipped; if every gridpoint fails the last error
    propagates.  Ties keep the earliest gridpoint.
    """
    if grid is None:
        sampled = np.array([T.values[key] for key in sorted(T.sampled)])
        if sampled.size == 0:
            raise ValueError("tensor has no sampled entries to build a grid from")
        grid = np.quantile(sampled, np.linspace(0.1, 1.0, 10)).tolist()
    grid = list(grid)
    if not grid:
        raise ValueError("empty threshold grid")
    best: tuple[float, float] | None = None
    last_exc: Exception | None = None
    for th in grid:
        try:
            sol = clusterer(T, float(th))
            err = clustering_error(sol, truth)
        except ValueError as exc:
            last_exc = exc
            continue
        if best is None or err < best[1]:
            best = (float(th), float(err))
    if best is None:
        raise ValueError(f"no feasible threshold in grid: {last_exc}") from last_exc
    return best
