"""Euclidean k-means and BIC-driven x-means over fixed-length windows.

k-means uses squared-distance weighted seeding, Lloyd iterations with
empty-cluster reseeding, and keeps the best of several restarts by inertia.
x-means grows the cluster count from k_min by locally splitting a cluster
in two whenever the split improves a spherical-Gaussian BIC score, up to
k_max. All assignments break ties toward the lowest cluster index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, NumericError
from .series import Subsequence


def euclidean(a, b) -> float:
    """Euclidean distance between two windows or plain vectors."""
    av = a.values if isinstance(a, Subsequence) else np.asarray(a, dtype=np.float64)
    bv = b.values if isinstance(b, Subsequence) else np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ConfigError(f"cannot compare vectors of shapes {av.shape} and {bv.shape}")
    return float(np.sqrt(((av - bv) ** 2).sum()))


@dataclass(frozen=True)
class Cluster:
    centroid: np.ndarray
    member_indices: np.ndarray
    size: int

    def __post_init__(self) -> None:
        c = np.ascontiguousarray(self.centroid, dtype=np.float64)
        if c is self.centroid and c.flags.writeable:
            c = c.copy()  # never freeze the caller's array in place
        c.setflags(write=False)
        object.__setattr__(self, "centroid", c)
        m = np.ascontiguousarray(np.sort(np.asarray(self.member_indices, dtype=np.int64)))
        m.setflags(write=False)
        object.__setattr__(self, "member_indices", m)
        if self.size != len(m) or self.size < 1:
            raise ConfigError("cluster must have size == len(member_indices) >= 1")


@dataclass(frozen=True)
class Clustering:
    """A full partition of the input points.

    points is the (n, d) matrix the clustering was computed over; clusters
    partition row indices 0..n-1. inertia is the sum of squared distances
    of every point to its own centroid.
    """

    points: np.ndarray
    clusters: tuple[Cluster, ...]
    k: int
    inertia: float
    n_min: int = 1
    inertia_trace: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts is self.points and pts.flags.writeable:
            pts = pts.copy()  # never freeze the caller's array in place
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.k != len(self.clusters) or self.k < 1:
            raise ConfigError("k must equal the number of clusters and be >= 1")
        seen = np.concatenate([c.member_indices for c in self.clusters])
        if len(seen) != len(pts) or len(np.unique(seen)) != len(pts):
            raise ConfigError("clusters must partition the points exactly")
        for c in self.clusters:
            mean = pts[c.member_indices].mean(axis=0)
            if not np.allclose(mean, c.centroid, atol=1e-9, rtol=0):
                raise NumericError("cluster centroid drifted from the mean of its members")

    def labels(self) -> np.ndarray:
        out = np.empty(len(self.points), dtype=np.int64)
        for j, c in enumerate(self.clusters):
            out[c.member_indices] = j
        return out

    def centroid_matrix(self) -> np.ndarray:
        return np.ascontiguousarray([c.centroid for c in self.clusters])


@dataclass(frozen=True)
class XMeansConfig:
    k_min: int = 2
    k_max: int = 8
    max_iter: int = 100
    restarts: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError(f"need 1 <= k_min <= k_max, got {self.k_min}, {self.k_max}")
        if self.max_iter < 1 or self.restarts < 1:
            raise ConfigError("max_iter and restarts must be >= 1")


def as_matrix(subseqs) -> np.ndarray:
    """Stack windows (or accept a ready (n, d) array) as float64 rows."""
    if isinstance(subseqs, np.ndarray):
        pts = np.ascontiguousarray(subseqs, dtype=np.float64)
    else:
        pts = np.ascontiguousarray([s.values if isinstance(s, Subsequence) else s for s in subseqs],
                                   dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ConfigError("need a non-empty 2-d collection of equal-length windows")
    return pts


def _mix(*parts: int) -> int:
    acc = 0
    for p in parts:
        acc = (acc * 1_000_003 + int(p) + 0x9E37) % (2**63)
    return acc


def _seed_centers(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Squared-distance weighted seeding (k-means++ style)."""
    n = len(pts)
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    min_d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(min_d2.sum())
        idx = rng.integers(n) if total <= 0 else int(rng.choice(n, p=min_d2 / total))
        centers[j] = pts[idx]
        min_d2 = np.minimum(min_d2, ((pts - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(pts: np.ndarray, k: int, rng: np.random.Generator, max_iter: int,
           trace: list[float] | None):
    centers = _seed_centers(pts, k, rng)
    prev = None
    labels = None
    for _ in range(max_iter):
        labels, d2 = kernels.assign_labels(pts, centers)
        for j in range(k):
            if not (labels == j).any():
                # revive an empty cluster at the globally worst-fit point
                centers[j] = pts[int(np.argmax(d2))]
                labels, d2 = kernels.assign_labels(pts, centers)
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = pts[members].mean(axis=0)
            # a cluster that re-emptied on a duplicate tie keeps its center
        inertia = 0.0
        for j in range(k):
            inertia += float(((pts[labels == j] - centers[j]) ** 2).sum())
        if trace is not None:
            trace.append(inertia)
        if prev is not None and np.array_equal(prev, labels):
            break
        prev = labels
    # duplicates can leave clusters permanently empty; drop them until the
    # remaining centers all own points
    while True:
        keep = [j for j in range(len(centers)) if (labels == j).any()]
        if len(keep) == len(centers):
            break
        centers = centers[keep]
        labels, _ = kernels.assign_labels(pts, centers)
    for j in range(len(centers)):
        centers[j] = pts[labels == j].mean(axis=0)
    inertia = 0.0
    for j in range(len(centers)):
        inertia += float(((pts[labels == j] - centers[j]) ** 2).sum())
    return labels, centers, inertia


def _build(pts: np.ndarray, labels: np.ndarray, centers: np.ndarray, inertia: float,
           n_min: int = 1, trace: list[float] | None = None) -> Clustering:
    clusters = []
    for j in range(len(centers)):
        members = np.flatnonzero(labels == j)
        clusters.append(Cluster(centroid=pts[members].mean(axis=0),
                                member_indices=members, size=len(members)))
    return Clustering(points=pts, clusters=tuple(clusters), k=len(clusters),
                      inertia=inertia, n_min=n_min,
                      inertia_trace=tuple(trace) if trace is not None else None)


def kmeans(subseqs, k: int, seed: int = 0, max_iter: int = 100, restarts: int = 5,
           inertia_trace: list[float] | None = None) -> Clustering:
    """Best-of-restarts Lloyd clustering.

    Restart r uses its own generator derived from (seed, r); the run with the
    lowest final inertia wins, ties resolved toward the lowest restart index.
    When inertia_trace is a list it receives the winning run's per-iteration
    inertia values.
    """
    pts = as_matrix(subseqs)
    if not 1 <= k <= len(pts):
        raise ConfigError(f"k must be in [1, {len(pts)}], got {k}")
    best = None
    for r in range(restarts):
        trace: list[float] | None = [] if inertia_trace is not None else None
        rng = np.random.default_rng(_mix(seed, r))
        labels, centers, inertia = _lloyd(pts, k, rng, max_iter, trace)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia, trace)
    labels, centers, inertia, trace = best
    if inertia_trace is not None:
        inertia_trace.extend(trace)
    return _build(pts, labels, centers, inertia, trace=trace)


def _bic(pts: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    """Bayesian information criterion under one shared spherical Gaussian.

    Returns -inf when the model is not evaluable (too few points or zero
    variance), which makes such configurations lose every comparison.
    """
    n, d = pts.shape
    kk = len(centers)
    if n <= kk:
        return -math.inf
    sse = 0.0
    for j in range(kk):
        sse += float(((pts[labels == j] - centers[j]) ** 2).sum())
    if sse <= 0:
        return -math.inf
    var = sse / (n - kk)
    log_l = -n * math.log(n) - n * d / 2.0 * math.log(2.0 * math.pi * var) - (n - kk) / 2.0
    for j in range(kk):
        nj = int((labels == j).sum())
        log_l += nj * math.log(nj)
    q = (kk - 1) + kk * d + 1
    return log_l - q / 2.0 * math.log(n)


def bic_score(subseqs, labels, centers) -> float:
    """Public wrapper over the BIC used to accept or reject x-means splits."""
    return _bic(as_matrix(subseqs), np.asarray(labels, dtype=np.int64), as_matrix(centers))


def xmeans(subseqs, config: XMeansConfig) -> Clustering:
    """Grow from k_min clusters by BIC-accepted local 2-means splits.

    Each round visits every current cluster in index order, fits a local
    2-means to its members, and replaces the cluster by the two children iff
    the split's BIC beats the unsplit BIC. Stops when a round accepts no
    split or k_max is reached.
    """
    pts = as_matrix(subseqs)
    if len(pts) < config.k_min:
        raise ConfigError(f"need at least k_min={config.k_min} windows, got {len(pts)}")
    base = kmeans(pts, config.k_min, seed=_mix(config.seed, 0xA11),
                  max_iter=config.max_iter, restarts=config.restarts)
    member_sets: list[np.ndarray] = [c.member_indices.copy() for c in base.clusters]
    round_no = 0
    while len(member_sets) < config.k_max:
        round_no += 1
        budget = config.k_max - len(member_sets)
        next_sets: list[np.ndarray] = []
        accepted = 0
        for ci, members in enumerate(member_sets):
            sub = pts[members]
            if budget <= 0 or len(members) < 4:
                next_sets.append(members)
                continue
            local = kmeans(sub, 2, seed=_mix(config.seed, round_no, ci),
                           max_iter=config.max_iter, restarts=config.restarts)
            if local.k < 2:
                next_sets.append(members)
                continue
            parent_bic = _bic(sub, np.zeros(len(sub), dtype=np.int64),
                              sub.mean(axis=0, keepdims=True))
            split_bic = _bic(sub, local.labels(), local.centroid_matrix())
            if split_bic > parent_bic:
                for child in local.clusters:
                    next_sets.append(members[child.member_indices])
                accepted += 1
                budget -= 1
            else:
                next_sets.append(members)
        member_sets = next_sets
        if accepted == 0:
            break
    labels = np.empty(len(pts), dtype=np.int64)
    for j, members in enumerate(member_sets):
        labels[members] = j
    centers = np.stack([pts[m].mean(axis=0) for m in member_sets])
    inertia = 0.0
    for j, m in enumerate(member_sets):
        inertia += float(((pts[m] - centers[j]) ** 2).sum())
    return _build(pts, labels, centers, inertia)


def enforce_min_size(clustering: Clustering, n_min: int) -> Clustering:
    """Merge away clusters smaller than n_min.

    Repeatedly takes the smallest undersized cluster and merges it into the
    cluster with the nearest centroid, recomputing that centroid, until all
    clusters reach n_min or only one cluster remains.
    """
    if n_min < 1:
        raise ConfigError(f"n_min must be >= 1, got {n_min}")
    pts = clustering.points
    member_sets = [c.member_indices.copy() for c in clustering.clusters]
    centroids = [c.centroid.copy() for c in clustering.clusters]
    while len(member_sets) > 1:
        sizes = [len(m) for m in member_sets]
        under = [j for j, s in enumerate(sizes) if s < n_min]
        if not under:
            break
        j = min(under, key=lambda idx: (sizes[idx], idx))
        dists = [euclidean(centroids[j], centroids[t]) if t != j else math.inf
                 for t in range(len(member_sets))]
        target = int(np.argmin(dists))
        merged = np.concatenate([member_sets[target], member_sets[j]])
        member_sets[target] = np.sort(merged)
        centroids[target] = pts[member_sets[target]].mean(axis=0)
        del member_sets[j], centroids[j]
    labels = np.empty(len(pts), dtype=np.int64)
    for j, m in enumerate(member_sets):
        labels[m] = j
    inertia = 0.0
    for j, m in enumerate(member_sets):
        inertia += float(((pts[m] - centroids[j]) ** 2).sum())
    centers = np.stack(centroids)
    return _build(pts, labels, centers, inertia, n_min=n_min)


def inter_cluster_distance(clustering: Clustering, stat: str = "mean") -> float:
    """Mean (default) or min pairwise centroid distance; needs k >= 2."""
    if stat not in ("mean", "min"):
        raise ConfigError(f"stat must be 'mean' or 'min', got {stat!r}")
    if clustering.k < 2:
        raise NumericError("inter-cluster distance needs at least two clusters")
    cents = clustering.centroid_matrix()
    dists = [euclidean(cents[a], cents[b])
             for a in range(len(cents)) for b in range(a + 1, len(cents))]
    return float(np.mean(dists)) if stat == "mean" else float(np.min(dists))


def mean_within_cluster_distance(clustering: Clustering) -> float:
    """Average distance of members to their own centroid across all points."""
    pts = clustering.points
    total = 0.0
    for c in clustering.clusters:
        diff = pts[c.member_indices] - c.centroid
        total += float(np.sqrt((diff**2).sum(axis=1)).sum())
    return total / len(pts)


def clustering_to_dict(clustering: Clustering) -> dict:
    return {
        "k": clustering.k,
        "inertia": clustering.inertia,
        "n_min": clustering.n_min,
        "clusters": [
            {
                "centroid": [float(v) for v in c.centroid],
                "members": [int(i) for i in c.member_indices],
                "size": c.size,
            }
            for c in clustering.clusters
        ],
    }
