"""Accuracy metrics, rank aggregation, and report serialization.

Forecast quality is reported as RMSE and nRMSE (RMSE divided by the
max-minus-min range of the true targets), both computed on unscaled values.
Rankings average per-dataset ranks (ascending nRMSE, 1 is best, ties get
the average rank): local ranks compare strategies within one model kind,
global ranks compare every model/strategy pair jointly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .clustering import Clustering
from .engine import RunTrace
from .errors import ConfigError, DataError, NumericError

CSV_HEADER = "dataset,model,strategy,rmse,nrmse,runtime_total_s,runtime_adapt_s,n_forecasts"


def rmse(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1:
        raise DataError(f"predictions {p.shape} and targets {t.shape} must be equal-length vectors")
    if len(p) == 0:
        raise DataError("cannot score zero forecasts")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def nrmse(predictions, targets) -> float:
    t = np.asarray(targets, dtype=np.float64)
    spread = float(t.max() - t.min()) if len(t) else 0.0
    if spread <= 0:
        raise NumericError("nRMSE is undefined for constant targets")
    return rmse(predictions, targets) / spread


@dataclass(frozen=True)
class MetricRow:
    dataset: str
    model: str
    strategy: str
    rmse: float
    nrmse: float
    runtime_total_s: float
    runtime_adapt_s: float
    n_forecasts: int


@dataclass(frozen=True)
class SummaryEntry:
    model: str
    strategy: str
    avg_nrmse: float
    std_nrmse: float
    local_rank: float
    global_rank_avg: float
    global_rank_std: float


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[MetricRow, ...]
    summary: tuple[SummaryEntry, ...]


def row_from_trace(trace: RunTrace, model_label: str | None = None) -> MetricRow:
    preds = trace.predictions()
    actuals = trace.actuals()
    return MetricRow(
        dataset=trace.dataset,
        model=model_label or trace.model_kind,
        strategy=trace.strategy,
        rmse=rmse(preds, actuals),
        nrmse=nrmse(preds, actuals),
        runtime_total_s=trace.offline_seconds + trace.stream_seconds,
        runtime_adapt_s=trace.adaptation_seconds,
        n_forecasts=len(trace.forecasts),
    )


def _ranks(values: Sequence[float]) -> np.ndarray:
    return np.asarray(rankdata(values, method="average"), dtype=np.float64)


def aggregate(rows: Sequence[MetricRow]) -> EvaluationReport:
    """Build the rank summary; every pair must cover the same datasets."""
    if not rows:
        raise DataError("no metric rows to aggregate")
    datasets = sorted({r.dataset for r in rows})
    pairs = sorted({(r.model, r.strategy) for r in rows})
    by_key = {(r.dataset, r.model, r.strategy): r for r in rows}
    if len(by_key) != len(rows):
        raise ConfigError("duplicate (dataset, model, strategy) rows")
    for d in datasets:
        for m, s in pairs:
            if (d, m, s) not in by_key:
                raise ConfigError(f"missing row for dataset={d!r} model={m!r} strategy={s!r}; "
                                  "rankings need a complete grid")

    local_rank: dict[tuple[str, str], list[float]] = {p: [] for p in pairs}
    global_rank: dict[tuple[str, str], list[float]] = {p: [] for p in pairs}
    models = sorted({m for m, _ in pairs})
    for d in datasets:
        # local: strategies ranked within each model kind
        for m in models:
            strategies = [s for mm, s in pairs if mm == m]
            vals = [by_key[(d, m, s)].nrmse for s in strategies]
            for s, rk in zip(strategies, _ranks(vals)):
                local_rank[(m, s)].append(float(rk))
        # global: every pair ranked jointly
        vals = [by_key[(d, m, s)].nrmse for m, s in pairs]
        for p, rk in zip(pairs, _ranks(vals)):
            global_rank[p].append(float(rk))

    summary = []
    for m, s in pairs:
        nr = [by_key[(d, m, s)].nrmse for d in datasets]
        summary.append(SummaryEntry(
            model=m, strategy=s,
            avg_nrmse=float(np.mean(nr)), std_nrmse=float(np.std(nr)),
            local_rank=float(np.mean(local_rank[(m, s)])),
            global_rank_avg=float(np.mean(global_rank[(m, s)])),
            global_rank_std=float(np.std(global_rank[(m, s)])),
        ))
    ordered = tuple(sorted(rows, key=lambda r: (r.dataset, r.model, r.strategy)))
    return EvaluationReport(rows=ordered, summary=tuple(summary))


def report_to_csv(report: EvaluationReport, zero_timings: bool = False) -> str:
    lines = [CSV_HEADER]
    for r in report.rows:
        total = 0.0 if zero_timings else r.runtime_total_s
        adapt = 0.0 if zero_timings else r.runtime_adapt_s
        lines.append(f"{r.dataset},{r.model},{r.strategy},{r.rmse!r},{r.nrmse!r},"
                     f"{total!r},{adapt!r},{r.n_forecasts}")
    return "\n".join(lines) + "\n"


def report_to_json(report: EvaluationReport, zero_timings: bool = False) -> str:
    payload = {
        "rows": [
            {
                "dataset": r.dataset, "model": r.model, "strategy": r.strategy,
                "rmse": r.rmse, "nrmse": r.nrmse,
                "runtime_total_s": 0.0 if zero_timings else r.runtime_total_s,
                "runtime_adapt_s": 0.0 if zero_timings else r.runtime_adapt_s,
                "n_forecasts": r.n_forecasts,
            }
            for r in report.rows
        ],
        "summary": [
            {
                "model": e.model, "strategy": e.strategy,
                "avg_nrmse": e.avg_nrmse, "std_nrmse": e.std_nrmse,
                "local_rank": e.local_rank,
                "global_rank_avg": e.global_rank_avg, "global_rank_std": e.global_rank_std,
            }
            for e in report.summary
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def report_from_json(text: str) -> EvaluationReport:
    try:
        payload = json.loads(text)
        rows = tuple(MetricRow(**r) for r in payload["rows"])
        summary = tuple(SummaryEntry(**e) for e in payload["summary"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"malformed report JSON: {exc}") from exc
    return EvaluationReport(rows=rows, summary=summary)


def emit_report(report: EvaluationReport, out_dir: str | Path,
                formats: Sequence[str] = ("csv", "json"), zero_timings: bool = False) -> list[Path]:
    """Write report.csv / report.json into out_dir; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "csv":
            path = out / "report.csv"
            path.write_text(report_to_csv(report, zero_timings=zero_timings))
        elif fmt == "json":
            path = out / "report.json"
            path.write_text(report_to_json(report, zero_timings=zero_timings))
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
        written.append(path)
    return written


def write_cluster_traces(clustering: Clustering, out_dir: str | Path,
                         prefix: str = "cluster") -> list[Path]:
    """One plot-data CSV per cluster: member windows plus a centroid row."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = clustering.points.shape[1]
    header = "is_centroid,origin," + ",".join(f"v{i}" for i in range(d))
    paths = []
    for j, cluster in enumerate(clustering.clusters):
        lines = [header]
        for idx in cluster.member_indices:
            vals = ",".join(repr(float(v)) for v in clustering.points[idx])
            lines.append(f"0,{int(idx)},{vals}")
        cent = ",".join(repr(float(v)) for v in cluster.centroid)
        lines.append(f"1,-1,{cent}")
        path = out / f"{prefix}_{j:02d}_traces.csv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def write_error_curves(traces: Sequence[RunTrace], out_dir: str | Path,
                       labels: Sequence[str] | None = None) -> list[Path]:
    """Per-strategy absolute-error-by-step CSVs for plotting.

    labels, when given, replace each trace's model kind in the file name
    (needed when several variants share a kind).
    """
    if labels is not None and len(labels) != len(traces):
        raise ConfigError("write_error_curves needs one label per trace")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, trace in enumerate(traces):
        model = labels[i] if labels is not None else trace.model_kind
        lines = ["step,abs_error"]
        for f in trace.forecasts:
            lines.append(f"{f.step},{abs(f.prediction - f.actual)!r}")
        path = out / f"errors_{trace.dataset}_{model}_{trace.strategy}.csv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths
