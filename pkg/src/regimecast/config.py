"""Engine configuration: defaults, flat key = value files, and overrides.

Config files hold one dotted key per line with '#' comments. Precedence is
command-line overrides, then file values, then defaults. Unknown keys are
rejected. The resolved configuration is echoed into every output directory.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .engine import DetectorConfig, StrategyConfig
from .clustering import XMeansConfig
from .errors import ConfigError
from .forecaster import ModelSpec, TrainConfig
from .pool import PoolConfig
from .series import Regime, SyntheticSpec

DEFAULT_REGIMES = (
    "sine:length=200,amplitude=1.0,period=40.0,mean=0.0"
    " | trend:length=200,start=3.0,slope=-0.01"
    " | ar1:length=200,mean=-2.0,phi=0.8,innovation_sd=0.15"
)


@dataclass(frozen=True)
class EngineConfig:
    window_len: int = 10
    fractions: tuple[float, float, float] = (0.4, 0.4, 0.2)
    scale: bool = True
    seed: int = 0
    periodic_fraction: float = 0.10
    model_kind: str = "linear_ar"
    model_hidden: int = 16
    model_activation: str = "tanh"
    train_epochs: int = 200
    train_learning_rate: float = 0.01
    train_batch_size: int = 32
    train_l2: float = 1e-6
    train_fine_tune_lr_factor: float = 0.1
    train_fine_tune_epochs: int = 50
    cluster_k_min: int = 2
    cluster_k_max: int = 8
    cluster_max_iter: int = 100
    cluster_restarts: int = 5
    cluster_min_size_fraction: float = 0.10
    cluster_inter_stat: str = "mean"
    drift_window: int = 30
    drift_confidence: float = 0.05
    drift_reference_mode: str = "mean"
    drift_enabled: bool = True
    pool_novelty_fraction: float = 0.20
    pool_recent_factor: int = 10
    pool_max_specialists: int = 32
    synthetic_regimes: str = DEFAULT_REGIMES
    synthetic_cycles: int = 3
    synthetic_noise_sd: float = 0.05
    synthetic_name: str = "synthetic"

    def model_spec(self) -> ModelSpec:
        return ModelSpec(kind=self.model_kind, input_len=self.window_len,
                         hidden=self.model_hidden, activation=self.model_activation)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.train_epochs, learning_rate=self.train_learning_rate,
                           batch_size=self.train_batch_size, l2=self.train_l2, seed=self.seed,
                           fine_tune_lr_factor=self.train_fine_tune_lr_factor,
                           fine_tune_epochs=self.train_fine_tune_epochs)

    def xmeans_config(self) -> XMeansConfig:
        return XMeansConfig(k_min=self.cluster_k_min, k_max=self.cluster_k_max,
                            max_iter=self.cluster_max_iter, restarts=self.cluster_restarts,
                            seed=self.seed)

    def pool_config(self) -> PoolConfig:
        return PoolConfig(novelty_fraction=self.pool_novelty_fraction,
                          min_size_fraction=self.cluster_min_size_fraction,
                          recent_factor=self.pool_recent_factor,
                          max_specialists=self.pool_max_specialists,
                          inter_stat=self.cluster_inter_stat)

    def detector_config(self) -> DetectorConfig:
        return DetectorConfig(window=self.drift_window, confidence=self.drift_confidence,
                              reference_mode=self.drift_reference_mode,
                              enabled=self.drift_enabled)

    def strategy_config(self, strategy: str) -> StrategyConfig:
        return StrategyConfig(strategy=strategy, model=self.model_spec(),
                              train=self.train_config(), xmeans=self.xmeans_config(),
                              pool=self.pool_config(), detector=self.detector_config(),
                              periodic_fraction=self.periodic_fraction,
                              scale=self.scale, seed=self.seed)

    def synthetic_spec(self) -> SyntheticSpec:
        regimes = parse_regimes(self.synthetic_regimes)
        if self.synthetic_cycles < 1:
            raise ConfigError("synthetic.cycles must be >= 1")
        return SyntheticSpec(regimes=tuple(regimes) * self.synthetic_cycles,
                             noise_sd=self.synthetic_noise_sd, seed=self.seed,
                             name=self.synthetic_name)


def _attr_for(key: str) -> str:
    return key.replace(".", "_")


def _key_for(attr: str) -> str:
    # first underscore separates the section for sectioned keys
    sections = ("model", "train", "cluster", "drift", "pool", "synthetic")
    for s in sections:
        if attr.startswith(s + "_"):
            return s + "." + attr[len(s) + 1 :]
    return attr


_FIELDS = {f.name: f for f in fields(EngineConfig)}
KNOWN_KEYS = sorted(_key_for(name) for name in _FIELDS)


def _convert(key: str, raw: str, target_type) -> object:
    raw = raw.strip()
    try:
        if target_type is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        if target_type is tuple:
            parts = [p for p in raw.replace("/", ",").split(",") if p.strip()]
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat key = value file; '#' starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def resolve_config(file_values: dict[str, str] | None = None,
                   overrides: dict[str, str] | None = None) -> EngineConfig:
    """Defaults, then file values, then overrides; unknown keys are errors."""
    cfg = EngineConfig()
    for source in (file_values or {}, overrides or {}):
        updates = {}
        for key, raw in source.items():
            attr = _attr_for(key)
            if attr not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}; known keys: {', '.join(KNOWN_KEYS)}")
            current = getattr(cfg, attr)
            updates[attr] = _convert(key, str(raw), type(current))
        cfg = replace(cfg, **updates)
    _validate(cfg)
    return cfg


def _validate(cfg: EngineConfig) -> None:
    if cfg.window_len < 1:
        raise ConfigError("window_len must be >= 1")
    if len(cfg.fractions) != 3:
        raise ConfigError("fractions must have three entries")
    # constructing the component configs runs their own validation
    cfg.model_spec()
    cfg.train_config()
    cfg.xmeans_config()
    cfg.pool_config()
    cfg.detector_config()
    if not 0 < cfg.periodic_fraction <= 1:
        raise ConfigError("periodic_fraction must be in (0, 1]")


def config_echo(cfg: EngineConfig) -> str:
    """Canonical key = value rendering of the resolved configuration."""
    lines = []
    for name in sorted(_FIELDS, key=_key_for):
        value = getattr(cfg, name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ",".join(repr(v) for v in value)
        else:
            text = str(value)
        lines.append(f"{_key_for(name)} = {text}")
    return "\n".join(lines) + "\n"


def parse_regimes(dsl: str) -> list[Regime]:
    """Parse 'kind:key=value,... | kind:...' into regime descriptors."""
    regimes = []
    for chunk in dsl.split("|"):
        chunk = chunk.strip()
        if not chunk:
            continue
        kind, _, rest = chunk.partition(":")
        kind = kind.strip()
        params: dict[str, float] = {}
        length = None
        if rest.strip():
            for pair in rest.split(","):
                pair = pair.strip()
                if not pair:
                    continue
                pkey, eq, pval = pair.partition("=")
                if not eq:
                    raise ConfigError(f"regime parameter {pair!r} must look like key=value")
                try:
                    num = float(pval.strip())
                except ValueError as exc:
                    raise ConfigError(f"regime parameter {pair!r}: {exc}") from exc
                if pkey.strip() == "length":
                    length = int(num)
                else:
                    params[pkey.strip()] = num
        if length is None:
            raise ConfigError(f"regime {kind!r} needs a length parameter")
        regimes.append(Regime(kind=kind, length=length, params=params))
    if not regimes:
        raise ConfigError("synthetic.regimes parsed to an empty list")
    return regimes
