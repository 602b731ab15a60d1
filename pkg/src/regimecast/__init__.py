"""Adaptive time-series forecasting with drift-triggered specialist pools.

A base one-step-ahead forecaster is fine-tuned into per-regime specialists
found by clustering validation windows. At inference each window is routed
to the nearest specialist; a bounded-deviation drift monitor triggers online
re-clustering and new specialists when the routing distances shift.
"""
from .clustering import (
    Cluster,
    Clustering,
    XMeansConfig,
    bic_score,
    enforce_min_size,
    euclidean,
    inter_cluster_distance,
    kmeans,
    mean_within_cluster_distance,
    xmeans,
)
from .config import EngineConfig, config_echo, parse_config_file, resolve_config
from .drift import DriftDetector, DriftVerdict, hoeffding_epsilon
from .engine import (
    STRATEGIES,
    DetectorConfig,
    EngineEvent,
    ForecastRecord,
    RunTrace,
    StrategyConfig,
    build_pool,
    compare,
    derive_seed,
    run,
    train_base,
    write_trace,
)
from .errors import (
    ConfigError,
    DataError,
    NumericError,
    PoolLimitError,
    RegimecastError,
)
from .evaluation import (
    CSV_HEADER,
    EvaluationReport,
    MetricRow,
    SummaryEntry,
    aggregate,
    emit_report,
    nrmse,
    report_from_json,
    report_to_csv,
    report_to_json,
    rmse,
    row_from_trace,
)
from .forecaster import (
    ModelSpec,
    TrainConfig,
    TrainingSample,
    WeightVector,
    fine_tune,
    gradient,
    init_weights,
    loss,
    predict,
    predict_batch,
    sliding_samples,
    train,
)
from .kernels import BACKEND
from .pool import (
    AdaptationReport,
    PoolConfig,
    Specialist,
    SpecialistPool,
    build_offline,
    load_pool,
    save_pool,
)
from .series import (
    Regime,
    SeriesSplit,
    Subsequence,
    SyntheticSpec,
    TimeSeries,
    fit_scaler,
    load_csv,
    make_synthetic,
    segment_nonoverlapping,
    split,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptationReport", "BACKEND", "CSV_HEADER", "Cluster", "Clustering",
    "ConfigError", "DataError", "DetectorConfig", "DriftDetector",
    "DriftVerdict", "EngineConfig", "EngineEvent", "EvaluationReport",
    "ForecastRecord", "MetricRow", "ModelSpec", "NumericError",
    "PoolConfig", "PoolLimitError", "Regime", "RegimecastError", "RunTrace",
    "STRATEGIES", "SeriesSplit", "Specialist", "SpecialistPool",
    "StrategyConfig", "Subsequence", "SummaryEntry", "SyntheticSpec",
    "TimeSeries", "TrainConfig", "TrainingSample", "WeightVector",
    "XMeansConfig", "aggregate", "bic_score", "build_offline", "build_pool",
    "compare", "config_echo", "derive_seed", "emit_report",
    "enforce_min_size", "euclidean", "fine_tune", "fit_scaler", "gradient",
    "hoeffding_epsilon", "init_weights", "inter_cluster_distance", "kmeans",
    "load_csv", "load_pool", "loss", "make_synthetic",
    "mean_within_cluster_distance", "nrmse", "parse_config_file", "predict",
    "predict_batch", "report_from_json", "report_to_csv", "report_to_json",
    "resolve_config", "rmse", "row_from_trace", "run", "save_pool",
    "segment_nonoverlapping", "sliding_samples", "split", "train",
    "train_base", "write_trace", "xmeans", "__version__",
]
