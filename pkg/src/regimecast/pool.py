"""Pool of cluster specialists sharing one base architecture.

Offline, validation windows are clustered and one specialist is fine-tuned
from the base weights per cluster. At inference each window routes to the
specialist with the nearest centroid. Online adaptation re-clusters a short
buffer of recent observations and spawns a specialist for every new centroid
that lies farther than the novelty threshold from all existing centroids;
centroids that are close instead count as fused. Specialists are never
removed, and the pool aborts rather than grow past max_specialists.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import forecaster
from .clustering import (
    Clustering,
    XMeansConfig,
    enforce_min_size,
    inter_cluster_distance,
    mean_within_cluster_distance,
    xmeans,
)
from .errors import ConfigError, DataError, PoolLimitError
from .forecaster import ModelSpec, TrainConfig, TrainingSample, WeightVector
from .kernels import assign_labels
from .series import Subsequence, TimeSeries

POOL_FORMAT = "regimecast-pool-v1"


@dataclass(frozen=True)
class PoolConfig:
    novelty_fraction: float = 0.20
    min_size_fraction: float = 0.10
    recent_factor: int = 10
    max_specialists: int = 32
    inter_stat: str = "mean"

    def __post_init__(self) -> None:
        if not 0 < self.novelty_fraction:
            raise ConfigError("novelty_fraction must be positive")
        if not 0 < self.min_size_fraction <= 1:
            raise ConfigError("min_size_fraction must be in (0, 1]")
        if self.recent_factor < 2:
            raise ConfigError("recent_factor must be >= 2 so adaptation can form windows")
        if self.max_specialists < 1:
            raise ConfigError("max_specialists must be >= 1")
        if self.inter_stat not in ("mean", "min"):
            raise ConfigError(f"inter_stat must be 'mean' or 'min', got {self.inter_stat!r}")


@dataclass
class Specialist:
    id: int
    centroid: np.ndarray
    weights: WeightVector
    train_count: int
    created_at: int | str

    def __post_init__(self) -> None:
        c = np.ascontiguousarray(self.centroid, dtype=np.float64)
        if c is self.centroid and c.flags.writeable:
            c = c.copy()  # never freeze the caller's array in place
        c.setflags(write=False)
        self.centroid = c


@dataclass(frozen=True)
class AdaptationReport:
    new_specialists: tuple[int, ...]
    fused: int
    recluster_k: int
    trigger: str
    skipped: bool = False


@dataclass
class SpecialistPool:
    """Mutable pool state. select/forecast are read-only; adapt mutates."""

    model_spec: ModelSpec
    base_weights: WeightVector
    config: PoolConfig = field(default_factory=PoolConfig)
    specialists: list[Specialist] = field(default_factory=list)
    novelty_threshold: float = 0.0
    recent: deque = field(default_factory=deque, repr=False)
    _centroids: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.recent = deque(self.recent, maxlen=self.recent_capacity)

    @property
    def window_len(self) -> int:
        return self.model_spec.input_len

    @property
    def recent_capacity(self) -> int:
        return self.config.recent_factor * self.window_len

    def observe(self, value: float) -> None:
        """Push one observed (scaled) value into the recent ring buffer."""
        self.recent.append(float(value))

    def recent_values(self, limit: int | None = None) -> np.ndarray:
        """Newest buffered observations, optionally only the last `limit`."""
        vals = np.asarray(self.recent, dtype=np.float64)
        if limit is not None and limit < len(vals):
            vals = vals[len(vals) - limit :]
        return vals

    def centroid_matrix(self) -> np.ndarray:
        if self._centroids is None:
            self._centroids = np.ascontiguousarray(
                [s.centroid for s in self.specialists], dtype=np.float64
            )
        return self._centroids

    def _invalidate(self) -> None:
        self._centroids = None

    def select(self, window) -> tuple[int, float]:
        """Nearest-centroid specialist id and its Euclidean distance.

        Ties resolve to the lowest specialist id.
        """
        if not self.specialists:
            raise ConfigError("pool has no specialists")
        vals = window.values if isinstance(window, Subsequence) else np.asarray(window, dtype=np.float64)
        labels, d2 = assign_labels(np.ascontiguousarray(vals[None, :]), self.centroid_matrix())
        idx = int(labels[0])
        return self.specialists[idx].id, float(math.sqrt(d2[0]))

    def forecast(self, window) -> tuple[float, int, float]:
        """One-step forecast routed through the selected specialist."""
        sid, dist = self.select(window)
        spec = next(s for s in self.specialists if s.id == sid)
        value = forecaster.predict(self.model_spec, spec.weights, window)
        return value, sid, dist

    def _recompute_threshold(self) -> None:
        # fraction of the mean pairwise centroid distance; with a single
        # specialist fall back to its stored within-cluster spread
        if len(self.specialists) >= 2:
            cents = self.centroid_matrix()
            dists = [
                float(np.linalg.norm(cents[a] - cents[b]))
                for a in range(len(cents))
                for b in range(a + 1, len(cents))
            ]
            stat = float(np.mean(dists)) if self.config.inter_stat == "mean" else float(np.min(dists))
            self.novelty_threshold = self.config.novelty_fraction * stat
        # single-specialist pools keep the threshold set at build/adapt time

    def adapt(self, recent: np.ndarray, trigger: str, train_config: TrainConfig,
              cluster_config: XMeansConfig, step: int | str = "online") -> AdaptationReport:
        """Re-cluster recent observations and absorb or spawn specialists.

        recent is a 1-d array of the newest scaled observations. Too little
        data (fewer than two windows, or fewer windows than k_min) yields a
        skipped no-op report.
        """
        recent = np.asarray(recent, dtype=np.float64)
        p = self.window_len
        if len(recent) < 2 * p:
            return AdaptationReport((), 0, 0, trigger, skipped=True)
        # hold the last value out as the final window's target, then align
        # windows so the newest observations all fall inside whole windows
        usable = recent[:-1]
        offset = len(usable) % p
        count = len(usable) // p
        if count < cluster_config.k_min:
            return AdaptationReport((), 0, 0, trigger, skipped=True)
        windows = []
        targets = []
        for i in range(count):
            a = offset + i * p
            windows.append(Subsequence(usable[a : a + p], origin=a))
            targets.append(float(recent[a + p]))
        k_max = min(cluster_config.k_max, count)
        local_cfg = XMeansConfig(k_min=min(cluster_config.k_min, k_max), k_max=k_max,
                                 max_iter=cluster_config.max_iter,
                                 restarts=cluster_config.restarts, seed=cluster_config.seed)
        clustering = xmeans(windows, local_cfg)
        n_min = max(2, math.ceil(self.config.min_size_fraction * count))
        n_min = min(n_min, count)
        clustering = enforce_min_size(clustering, n_min)

        new_ids: list[int] = []
        fused = 0
        for cluster in clustering.clusters:
            cents = self.centroid_matrix()
            gaps = np.sqrt(((cents - cluster.centroid) ** 2).sum(axis=1))
            if float(gaps.min()) > self.novelty_threshold:
                samples = [
                    TrainingSample(windows[i], targets[i]) for i in cluster.member_indices
                ]
                if not samples:
                    fused += 1
                    continue
                if len(self.specialists) + 1 > self.config.max_specialists:
                    raise PoolLimitError(
                        f"pool would exceed max_specialists={self.config.max_specialists} "
                        f"(trigger={trigger!r}, step={step!r}, cluster size={cluster.size})"
                    )
                weights = forecaster.fine_tune(self.model_spec, train_config,
                                               self.base_weights, samples)
                sid = max((s.id for s in self.specialists), default=-1) + 1
                self.specialists.append(Specialist(id=sid, centroid=cluster.centroid,
                                                   weights=weights,
                                                   train_count=len(samples),
                                                   created_at=step))
                self._invalidate()
                new_ids.append(sid)
            else:
                fused += 1
        if new_ids:
            self._recompute_threshold()
        return AdaptationReport(tuple(new_ids), fused, clustering.k, trigger)


def cluster_training_samples(series: TimeSeries, subseqs: list[Subsequence],
                             member_indices, valid_range: range,
                             window_len: int) -> list[TrainingSample]:
    """Pair each member window with the observation right after it.

    Members whose target index falls outside valid_range are dropped.
    """
    out = []
    for i in member_indices:
        sub = subseqs[int(i)]
        t = sub.origin + window_len
        if valid_range.start <= t < valid_range.stop:
            out.append(TrainingSample(sub, float(series.values[t])))
    return out


def cluster_windows(subseqs: list[Subsequence], cluster_config: XMeansConfig,
                    pool_config: PoolConfig | None = None) -> Clustering:
    """Clustering stage of the offline build: X-means then minimum-size repair."""
    if not subseqs:
        raise DataError("no validation windows to build the pool from")
    pool_config = pool_config or PoolConfig()
    n_min = max(1, math.ceil(pool_config.min_size_fraction * len(subseqs)))
    return enforce_min_size(xmeans(subseqs, cluster_config), n_min)


def build_offline(model_spec: ModelSpec, base_weights: WeightVector,
                  subseqs: list[Subsequence], series: TimeSeries, valid_range: range,
                  train_config: TrainConfig, cluster_config: XMeansConfig,
                  pool_config: PoolConfig | None = None) -> tuple[SpecialistPool, Clustering]:
    """Cluster validation windows and fine-tune one specialist per cluster.

    Returns the pool plus the clustering it was built from (useful for
    inspection output). The minimum cluster size is
    ceil(min_size_fraction * len(subseqs)).
    """
    pool_config = pool_config or PoolConfig()
    clustering = cluster_windows(subseqs, cluster_config, pool_config)

    pool = SpecialistPool(model_spec=model_spec, base_weights=base_weights, config=pool_config)
    if clustering.k > pool_config.max_specialists:
        raise PoolLimitError(
            f"offline clustering produced {clustering.k} clusters; "
            f"max_specialists={pool_config.max_specialists}"
        )
    for sid, cluster in enumerate(clustering.clusters):
        samples = cluster_training_samples(series, subseqs, cluster.member_indices,
                                            valid_range, model_spec.input_len)
        if samples:
            weights = forecaster.fine_tune(model_spec, train_config, base_weights, samples)
        else:
            # a cluster whose members all lack in-range targets keeps base weights
            weights = forecaster.clone_transfer(base_weights)
        pool.specialists.append(Specialist(id=sid, centroid=cluster.centroid,
                                           weights=weights, train_count=len(samples),
                                           created_at="offline"))
    pool._invalidate()
    if clustering.k >= 2:
        pool.novelty_threshold = pool_config.novelty_fraction * inter_cluster_distance(
            clustering, pool_config.inter_stat
        )
    else:
        pool.novelty_threshold = pool_config.novelty_fraction * mean_within_cluster_distance(
            clustering
        )
    return pool, clustering


def pool_to_dict(pool: SpecialistPool) -> dict:
    return {
        "format": POOL_FORMAT,
        "model": forecaster.weights_to_dict(pool.model_spec, pool.base_weights),
        "novelty_threshold": pool.novelty_threshold,
        "config": {
            "novelty_fraction": pool.config.novelty_fraction,
            "min_size_fraction": pool.config.min_size_fraction,
            "recent_factor": pool.config.recent_factor,
            "max_specialists": pool.config.max_specialists,
            "inter_stat": pool.config.inter_stat,
        },
        "specialists": [
            {
                "id": s.id,
                "centroid": [float(v) for v in s.centroid],
                "values": [float(v) for v in s.weights.values],
                "train_count": s.train_count,
                "created_at": s.created_at,
            }
            for s in pool.specialists
        ],
    }


def pool_from_dict(payload: dict) -> SpecialistPool:
    if payload.get("format") != POOL_FORMAT:
        raise DataError(f"unrecognized pool format {payload.get('format')!r}")
    model_spec, base_weights = forecaster.weights_from_dict(payload["model"])
    cfg = PoolConfig(**payload["config"])
    pool = SpecialistPool(model_spec=model_spec, base_weights=base_weights, config=cfg,
                          novelty_threshold=float(payload["novelty_threshold"]))
    lay = model_spec.layout()
    for item in payload["specialists"]:
        values = np.asarray(item["values"], dtype=np.float64)
        if len(values) != model_spec.weight_count:
            raise DataError(f"specialist {item['id']} has {len(values)} weights; "
                            f"{model_spec.weight_count} expected")
        pool.specialists.append(Specialist(
            id=int(item["id"]),
            centroid=np.asarray(item["centroid"], dtype=np.float64),
            weights=WeightVector(values, lay),
            train_count=int(item["train_count"]),
            created_at=item["created_at"],
        ))
    return pool


def save_pool(pool: SpecialistPool, path: str | Path) -> None:
    Path(path).write_text(json.dumps(pool_to_dict(pool), indent=2) + "\n")


def load_pool(path: str | Path) -> SpecialistPool:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"pool file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"pool file {path} is not valid JSON: {exc}") from exc
    return pool_from_dict(payload)
