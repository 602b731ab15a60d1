"""Streaming evaluation engine for the four forecasting strategies.

- base: the globally trained forecaster, never updated.
- offline_tune: route every window to the nearest offline specialist.
- online_tune: offline pool plus the drift monitor; a drift verdict
  triggers one adaptation pass and a monitor re-warm.
- periodic_tune: offline pool adapted unconditionally on a fixed cadence,
  monitor disabled.

The test range is streamed one step at a time with teacher forcing: every
forecast uses the last window of true observations, the first window
borrowing the tail of the validation range. All model arithmetic happens in
scaled space; traces record forecasts in original units. One master seed
derives every component seed.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import forecaster
from .clustering import Clustering, XMeansConfig
from .drift import DriftDetector
from .errors import ConfigError
from .forecaster import ModelSpec, TrainConfig, WeightVector
from .pool import PoolConfig, SpecialistPool, build_offline
from .series import SeriesSplit, TimeSeries, fit_scaler, segment_nonoverlapping

STRATEGIES = ("base", "offline_tune", "online_tune", "periodic_tune")

# Fixed role tags for deriving component seeds from the master seed.
_SEED_ROLES = {"train": 1, "cluster": 2, "adapt": 3}


def derive_seed(master: int, role: str) -> int:
    if role not in _SEED_ROLES:
        raise ConfigError(f"unknown seed role {role!r}")
    return (int(master) * 1_000_003 + _SEED_ROLES[role]) % (2**31)


@dataclass(frozen=True)
class DetectorConfig:
    window: int = 30
    confidence: float = 0.05
    reference_mode: str = "mean"
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ConfigError("detector window must be >= 1")
        if not 0 < self.confidence < 1:
            raise ConfigError("detector confidence must be in (0, 1)")
        if self.reference_mode not in ("mean", "first"):
            raise ConfigError(f"reference_mode must be 'mean' or 'first', got {self.reference_mode!r}")


@dataclass(frozen=True)
class StrategyConfig:
    strategy: str
    model: ModelSpec
    train: TrainConfig = TrainConfig()
    xmeans: XMeansConfig = XMeansConfig()
    pool: PoolConfig = PoolConfig()
    detector: DetectorConfig = DetectorConfig()
    periodic_fraction: float = 0.10
    scale: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not 0 < self.periodic_fraction <= 1:
            raise ConfigError("periodic_fraction must be in (0, 1]")

    def seeded(self) -> "StrategyConfig":
        """Copy with component seeds derived from the master seed."""
        import dataclasses

        return dataclasses.replace(
            self,
            train=dataclasses.replace(self.train, seed=derive_seed(self.seed, "train")),
            xmeans=dataclasses.replace(self.xmeans, seed=derive_seed(self.seed, "cluster")),
        )


@dataclass(frozen=True)
class ForecastRecord:
    step: int
    index: int
    prediction: float
    actual: float
    selected: int | str


@dataclass(frozen=True)
class EngineEvent:
    """One adaptation or drift occurrence during streaming."""

    kind: str
    step: int
    new_specialists: tuple[int, ...] = ()
    fused: int = 0
    recluster_k: int = 0
    mean_delta: float = 0.0
    epsilon: float = 0.0
    observed_range: float = 0.0
    skipped: bool = False


@dataclass
class RunTrace:
    dataset: str
    strategy: str
    model_kind: str
    forecasts: list[ForecastRecord] = field(default_factory=list)
    events: list[EngineEvent] = field(default_factory=list)
    offline_seconds: float = 0.0
    stream_seconds: float = 0.0
    adaptation_seconds: float = 0.0
    pool_size_final: int = 0

    @property
    def adaptation_count(self) -> int:
        return sum(1 for e in self.events if e.kind in ("drift", "periodic"))

    def predictions(self) -> np.ndarray:
        return np.asarray([f.prediction for f in self.forecasts])

    def actuals(self) -> np.ndarray:
        return np.asarray([f.actual for f in self.forecasts])


def train_base(series: TimeSeries, split: SeriesSplit, config: StrategyConfig) -> WeightVector:
    """Fit the base forecaster on all stride-1 train windows (scaled space)."""
    cfg = config.seeded()
    scaled = fit_scaler(series, split) if cfg.scale else series
    samples = forecaster.sliding_samples(scaled, split.train, cfg.model.input_len)
    return forecaster.train(cfg.model, cfg.train, samples)


def build_pool(series: TimeSeries, split: SeriesSplit, config: StrategyConfig,
               base_weights: WeightVector | None = None
               ) -> tuple[WeightVector, SpecialistPool, Clustering]:
    """Offline phase: base fit plus the clustered, fine-tuned specialist pool."""
    cfg = config.seeded()
    scaled = fit_scaler(series, split) if cfg.scale else series
    if base_weights is None:
        base_weights = train_base(series, split, config)
    val_windows = segment_nonoverlapping(scaled, split.val, cfg.model.input_len)
    pool, clustering = build_offline(cfg.model, base_weights, val_windows, scaled,
                                     split.val, cfg.train, cfg.xmeans, cfg.pool)
    return base_weights, pool, clustering


def run(series: TimeSeries, split: SeriesSplit, config: StrategyConfig,
        base_weights: WeightVector | None = None,
        pool: SpecialistPool | None = None) -> RunTrace:
    """Stream the test range under one strategy and record everything.

    base_weights, when given, skips base training (used by compare so all
    strategies share the same base fit). A preloaded pool skips the offline
    build for the pool strategies.
    """
    cfg = config.seeded()
    p = cfg.model.input_len
    trace = RunTrace(dataset=series.name, strategy=cfg.strategy, model_kind=cfg.model.kind)

    t0 = time.perf_counter()
    scaled = fit_scaler(series, split) if cfg.scale else series
    if base_weights is None:
        samples = forecaster.sliding_samples(scaled, split.train, p)
        base_weights = forecaster.train(cfg.model, cfg.train, samples)
    if cfg.strategy != "base" and pool is None:
        base_weights, pool, _ = build_pool(series, split, config, base_weights)
    trace.offline_seconds = time.perf_counter() - t0

    vals = scaled.values
    raw = series.values
    test = split.test
    n_test = len(test)
    interval = max(1, math.ceil(cfg.periodic_fraction * n_test))

    detector: DriftDetector | None = None
    warmup: list[float] = []
    last_adapt_step = 0

    t1 = time.perf_counter()
    for step, t in enumerate(test, start=1):
        window = vals[t - p : t]
        if cfg.strategy == "base":
            yhat = forecaster.predict(cfg.model, base_weights, window)
            selected: int | str = "base"
            dist = 0.0
        else:
            yhat, selected, dist = pool.forecast(window)
        trace.forecasts.append(ForecastRecord(
            step=step, index=t,
            prediction=float(scaled.to_unscaled(yhat)) if cfg.scale else float(yhat),
            actual=float(raw[t]), selected=selected,
        ))
        if cfg.strategy != "base":
            pool.observe(vals[t])

        if cfg.strategy == "online_tune" and cfg.detector.enabled:
            if detector is None:
                if cfg.detector.reference_mode == "first":
                    detector = DriftDetector(dist, cfg.detector.window, cfg.detector.confidence)
                else:
                    warmup.append(dist)
                    if len(warmup) == cfg.detector.window:
                        detector = DriftDetector(float(np.mean(warmup)), cfg.detector.window,
                                                 cfg.detector.confidence)
                        warmup = []
            else:
                verdict = detector.observe(dist)
                if verdict.drifted:
                    ta = time.perf_counter()
                    report = pool.adapt(pool.recent_values(), "drift", cfg.train,
                                        cfg.xmeans, step=step)
                    trace.adaptation_seconds += time.perf_counter() - ta
                    trace.events.append(EngineEvent(
                        kind="drift", step=step,
                        new_specialists=report.new_specialists, fused=report.fused,
                        recluster_k=report.recluster_k, mean_delta=verdict.mean_delta,
                        epsilon=verdict.epsilon, observed_range=detector.observed_range,
                        skipped=report.skipped,
                    ))
                    # re-warm: the reference is recomputed against the updated
                    # centroids over the next `window` selection distances
                    detector = None
                    warmup = []
        elif cfg.strategy == "periodic_tune" and step % interval == 0:
            ta = time.perf_counter()
            recent = pool.recent_values(limit=step - last_adapt_step)
            report = pool.adapt(recent, "periodic", cfg.train, cfg.xmeans, step=step)
            trace.adaptation_seconds += time.perf_counter() - ta
            trace.events.append(EngineEvent(
                kind="periodic", step=step,
                new_specialists=report.new_specialists, fused=report.fused,
                recluster_k=report.recluster_k, skipped=report.skipped,
            ))
            last_adapt_step = step
    trace.stream_seconds = time.perf_counter() - t1
    trace.pool_size_final = len(pool.specialists) if pool is not None else 0
    return trace


def compare(series: TimeSeries, split: SeriesSplit, configs: Sequence[StrategyConfig]) -> list[RunTrace]:
    """Run several strategy configs over one series with a shared base fit.

    Configs that share (model, train settings, seed, scaling) reuse one base
    training pass. Returns one trace per config, in input order.
    """
    if len(configs) < 2:
        raise ConfigError("compare needs at least two strategy configs")
    cache: dict[tuple, WeightVector] = {}
    traces = []
    for cfg in configs:
        key = (cfg.model, cfg.train, cfg.seed, cfg.scale)
        if key not in cache:
            cache[key] = train_base(series, split, cfg)
        traces.append(run(series, split, cfg, base_weights=cache[key]))
    return traces


def trace_to_jsonl(trace: RunTrace) -> str:
    lines = []
    for f in trace.forecasts:
        lines.append(json.dumps({
            "step": f.step, "index": f.index, "prediction": f.prediction,
            "actual": f.actual, "selected": f.selected,
        }))
    return "\n".join(lines) + "\n"


def events_to_jsonl(trace: RunTrace) -> str:
    lines = []
    for e in trace.events:
        lines.append(json.dumps({
            "kind": e.kind, "step": e.step,
            "new_specialists": list(e.new_specialists), "fused": e.fused,
            "recluster_k": e.recluster_k, "mean_delta": e.mean_delta,
            "epsilon": e.epsilon, "observed_range": e.observed_range,
            "skipped": e.skipped,
        }))
    return "\n".join(lines) + ("\n" if lines else "")


def trace_summary(trace: RunTrace) -> dict:
    return {
        "dataset": trace.dataset,
        "strategy": trace.strategy,
        "model": trace.model_kind,
        "n_forecasts": len(trace.forecasts),
        "events": len(trace.events),
        "adaptations": trace.adaptation_count,
        "pool_size_final": trace.pool_size_final,
        "offline_seconds": trace.offline_seconds,
        "stream_seconds": trace.stream_seconds,
        "adaptation_seconds": trace.adaptation_seconds,
    }


def write_trace(trace: RunTrace, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{trace.strategy}_{trace.model_kind}"
    (out / f"trace_{stem}.jsonl").write_text(trace_to_jsonl(trace))
    (out / f"events_{stem}.jsonl").write_text(events_to_jsonl(trace))
    (out / f"summary_{stem}.json").write_text(json.dumps(trace_summary(trace), indent=2) + "\n")
