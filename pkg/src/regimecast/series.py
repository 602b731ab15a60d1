"""Series ingestion, splitting, scaling, windowing, and synthetic generation.

A series is a 1-d float64 array treated as an immutable value. Splits are
contiguous index ranges in train/validation/test order. Windows are fixed
length subsequences used both as model inputs and as clustering points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_FRACTIONS = (0.4, 0.4, 0.2)


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=np.float64)
    if out is values and values.flags.writeable:
        out = values.copy()  # never freeze the caller's array in place
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeSeries:
    """Univariate series plus optional min/max scaling stats.

    scale_stats, when set, holds the (min, max) of the raw values the scaler
    was fitted on; values are then the scaled ones.
    """

    values: np.ndarray
    name: str = "series"
    scale_stats: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(np.atleast_1d(self.values)))
        if self.values.ndim != 1:
            raise DataError(f"series {self.name!r} must be one-dimensional")
        if not np.isfinite(self.values).all():
            raise DataError(f"series {self.name!r} contains non-finite values")
        if self.scale_stats is not None:
            lo, hi = self.scale_stats
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise DataError(f"series {self.name!r} has degenerate scale stats {self.scale_stats}")

    def __len__(self) -> int:
        return len(self.values)

    def to_unscaled(self, scaled):
        """Map values from scaled space back to original units."""
        if self.scale_stats is None:
            return scaled
        lo, hi = self.scale_stats
        return np.asarray(scaled) * (hi - lo) + lo

    def to_scaled(self, raw):
        if self.scale_stats is None:
            return raw
        lo, hi = self.scale_stats
        return (np.asarray(raw) - lo) / (hi - lo)


@dataclass(frozen=True)
class SeriesSplit:
    """Contiguous train/validation/test index ranges over one series."""

    train: range
    val: range
    test: range
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS

    def __post_init__(self) -> None:
        if self.train.stop != self.val.start or self.val.stop != self.test.start:
            raise DataError("split ranges must be contiguous and ordered train, val, test")


@dataclass(frozen=True)
class Subsequence:
    """Fixed-length window of a series; origin is the absolute start index."""

    values: np.ndarray
    origin: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Regime:
    """One synthetic segment. kind is sine, trend, ar1, or level."""

    kind: str
    length: int
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("sine", "trend", "ar1", "level"):
            raise ConfigError(f"unknown regime kind {self.kind!r}")
        if self.length < 2:
            raise ConfigError(f"regime {self.kind!r} length must be >= 2, got {self.length}")


@dataclass(frozen=True)
class SyntheticSpec:
    regimes: tuple[Regime, ...]
    noise_sd: float = 0.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self) -> None:
        if not self.regimes:
            raise ConfigError("synthetic spec needs at least one regime")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be non-negative")


def load_csv(path: str | Path, column: str | int = 0, min_rows: int | None = None,
             name: str | None = None) -> TimeSeries:
    """Load one numeric column from a CSV file.

    column may be a zero-based index or, when the file has a header row, a
    column name. Unparseable cells are an error naming the 1-based file row;
    they are never skipped.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"data file is empty: {path}")

    def parses(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header: list[str] | None = None
    first = rows[0]
    if not all(parses(c) for c in first):
        header = [c.strip() for c in first]

    if isinstance(column, str):
        if header is None:
            raise DataError(f"column {column!r} requested but {path} has no header row")
        try:
            col = header.index(column)
        except ValueError:
            raise DataError(f"column {column!r} not found in {path}; header is {header}") from None
    else:
        col = int(column)

    data_rows = rows[1:] if header is not None else rows
    start_line = 2 if header is not None else 1
    out = np.empty(len(data_rows), dtype=np.float64)
    for i, row in enumerate(data_rows):
        if col >= len(row):
            raise DataError(f"row {start_line + i} of {path} has no column {col}")
        cell = row[col].strip()
        try:
            out[i] = float(cell)
        except ValueError:
            raise DataError(f"non-numeric value {cell!r} at row {start_line + i} of {path}") from None
    if not np.isfinite(out).all():
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise DataError(f"non-finite value at row {start_line + bad} of {path}")
    if min_rows is not None and len(out) < min_rows:
        raise DataError(f"{path} has {len(out)} rows; at least {min_rows} required")
    return TimeSeries(out, name=name or path.stem)


def split(series: TimeSeries, fractions: Sequence[float] = DEFAULT_FRACTIONS,
          window_len: int = 10) -> SeriesSplit:
    """Contiguous train/val/test split by fractions of the series length.

    Train and validation sizes are floors of their fractions; test takes the
    remainder. Every part must be longer than window_len so that at least one
    window and target fit.
    """
    f = tuple(float(v) for v in fractions)
    if len(f) != 3 or any(v <= 0 for v in f) or abs(sum(f) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must be three positive values summing to 1, got {f}")
    n = len(series)
    n_train = int(math.floor(f[0] * n))
    n_val = int(math.floor(f[1] * n))
    n_test = n - n_train - n_val
    parts = {"train": n_train, "val": n_val, "test": n_test}
    for part, size in parts.items():
        if size < window_len + 1:
            raise DataError(
                f"{part} split of {series.name!r} has {size} points; "
                f"needs at least {window_len + 1} for window length {window_len}"
            )
    return SeriesSplit(
        train=range(0, n_train),
        val=range(n_train, n_train + n_val),
        test=range(n_train + n_val, n),
        fractions=f,
    )


def fit_scaler(series: TimeSeries, series_split: SeriesSplit) -> TimeSeries:
    """Min-max scale the whole series using stats from the train range only.

    Returns a new series whose values are (x - min) / (max - min); the stats
    are retained so forecasts can be mapped back to original units.
    """
    train_vals = series.values[series_split.train.start : series_split.train.stop]
    lo = float(train_vals.min())
    hi = float(train_vals.max())
    if hi - lo <= 0:
        raise DataError(f"train split of {series.name!r} is constant; min-max scaling undefined")
    scaled = (series.values - lo) / (hi - lo)
    return TimeSeries(scaled, name=series.name, scale_stats=(lo, hi))


def segment_nonoverlapping(series: TimeSeries, index_range: range, window_len: int) -> list[Subsequence]:
    """Cut a range into floor(len/window_len) adjacent windows from its start.

    The remainder at the end of the range is dropped.
    """
    if window_len < 1:
        raise ConfigError(f"window_len must be >= 1, got {window_len}")
    count = len(index_range) // window_len
    out = []
    for i in range(count):
        a = index_range.start + i * window_len
        out.append(Subsequence(series.values[a : a + window_len], origin=a))
    return out


def window_at(series: TimeSeries, t: int, window_len: int) -> Subsequence:
    """The window of window_len observations ending at index t inclusive."""
    if t < window_len - 1 or t >= len(series):
        raise DataError(f"window ending at {t} does not fit in series of length {len(series)}")
    a = t - window_len + 1
    return Subsequence(series.values[a : t + 1], origin=a)


def _gen_regime(regime: Regime, rng: np.random.Generator) -> np.ndarray:
    p = regime.params
    n = regime.length
    i = np.arange(n, dtype=np.float64)
    if regime.kind == "sine":
        amp = float(p.get("amplitude", 1.0))
        period = float(p.get("period", 40.0))
        phase = float(p.get("phase", 0.0))
        mean = float(p.get("mean", 0.0))
        if period <= 0:
            raise ConfigError("sine period must be positive")
        return mean + amp * np.sin(2.0 * np.pi * i / period + phase)
    if regime.kind == "trend":
        start = float(p.get("start", 0.0))
        slope = float(p.get("slope", 0.01))
        return start + slope * i
    if regime.kind == "ar1":
        mean = float(p.get("mean", 0.0))
        phi = float(p.get("phi", 0.8))
        sd = float(p.get("innovation_sd", 0.1))
        if not -1.0 < phi < 1.0:
            raise ConfigError(f"ar1 phi must be in (-1, 1), got {phi}")
        out = np.empty(n)
        spread = sd / math.sqrt(1.0 - phi * phi) if sd > 0 else 0.0
        out[0] = mean + spread * rng.standard_normal()
        eps = sd * rng.standard_normal(n - 1)
        for t in range(1, n):
            out[t] = mean + phi * (out[t - 1] - mean) + eps[t - 1]
        return out
    # level
    return np.full(n, float(p.get("level", 0.0)))


def make_synthetic(spec: SyntheticSpec, window_len: int | None = None) -> TimeSeries:
    """Deterministically generate a regime-switching series from a spec.

    Gaussian observation noise with sd spec.noise_sd is added to every
    segment. When window_len is given, every segment must be at least twice
    that long so each regime contributes whole windows.
    """
    if window_len is not None:
        for r in spec.regimes:
            if r.length < 2 * window_len:
                raise ConfigError(
                    f"regime {r.kind!r} has length {r.length}; needs >= {2 * window_len} "
                    f"for window length {window_len}"
                )
    rng = np.random.default_rng(spec.seed)
    parts = [_gen_regime(r, rng) for r in spec.regimes]
    values = np.concatenate(parts)
    if spec.noise_sd > 0:
        values = values + spec.noise_sd * rng.standard_normal(len(values))
    return TimeSeries(values, name=spec.name)
