"""One-step-ahead forecasters over fixed-length windows.

Two reference models share one flat weight representation:

- linear_ar: affine map w . window + b, trained in closed form by ridge
  normal equations.
- mlp: one hidden layer (tanh or relu), linear output, trained by plain
  mini-batch gradient descent with a fixed learning rate.

Fine-tuning always runs gradient descent from a copied weight vector, for
both kinds, at a scaled learning rate. The training loss everywhere is
mean squared error plus l2 * |weights|^2 over the full flat vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, DataError, NumericError
from .series import Subsequence, TimeSeries

KINDS = ("linear_ar", "mlp")
ACTIVATIONS = {"tanh": 0, "relu": 1}


@dataclass(frozen=True)
class ModelSpec:
    """Architecture descriptor. input_len is the window length."""

    kind: str
    input_len: int
    hidden: int = 16
    activation: str = "tanh"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"model kind must be one of {KINDS}, got {self.kind!r}")
        if self.input_len < 1:
            raise ConfigError(f"input_len must be >= 1, got {self.input_len}")
        if self.kind == "mlp" and self.hidden < 1:
            raise ConfigError(f"hidden must be >= 1, got {self.hidden}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {tuple(ACTIVATIONS)}, got {self.activation!r}")

    @property
    def weight_count(self) -> int:
        d = self.input_len
        if self.kind == "linear_ar":
            return d + 1
        h = self.hidden
        return d * h + h + h + 1

    def layout(self) -> dict[str, slice]:
        """Mapping from parameter role to its slice of the flat vector."""
        d = self.input_len
        if self.kind == "linear_ar":
            return {"w": slice(0, d), "b": slice(d, d + 1)}
        h = self.hidden
        return {
            "w1": slice(0, d * h),
            "b1": slice(d * h, d * h + h),
            "w2": slice(d * h + h, d * h + 2 * h),
            "b2": slice(d * h + 2 * h, d * h + 2 * h + 1),
        }


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int = 32
    l2: float = 1e-6
    seed: int = 0
    fine_tune_lr_factor: float = 0.1
    fine_tune_epochs: int = 50

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.fine_tune_epochs < 0:
            raise ConfigError("epoch counts must be non-negative")
        if self.learning_rate <= 0 or self.fine_tune_lr_factor <= 0:
            raise ConfigError("learning rates must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.l2 < 0:
            raise ConfigError("l2 must be non-negative")


@dataclass(frozen=True)
class WeightVector:
    """Flat parameter vector plus the role layout it was built with."""

    values: np.ndarray
    layout: dict[str, slice] = field(compare=False)

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals is self.values and vals.flags.writeable:
            vals = vals.copy()  # never freeze the caller's array in place
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TrainingSample:
    """Input window paired with the observation that follows it."""

    input: Subsequence
    target: float


def sliding_samples(series: TimeSeries, index_range: range, window_len: int) -> list[TrainingSample]:
    """All stride-1 window/next-value pairs lying fully inside the range."""
    vals = series.values
    out = []
    for a in range(index_range.start, index_range.stop - window_len):
        out.append(TrainingSample(Subsequence(vals[a : a + window_len], origin=a),
                                  float(vals[a + window_len])))
    return out


def stack_samples(samples: Sequence[TrainingSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise DataError("no training samples provided")
    x = np.ascontiguousarray([s.input.values for s in samples], dtype=np.float64)
    y = np.ascontiguousarray([s.target for s in samples], dtype=np.float64)
    return x, y


def init_weights(spec: ModelSpec, seed: int) -> WeightVector:
    """Deterministic initial weights.

    linear_ar starts at zero. The mlp draws each weight matrix uniform in
    +-sqrt(6 / (fan_in + fan_out)) with zero biases.
    """
    if spec.kind == "linear_ar":
        return WeightVector(np.zeros(spec.weight_count), spec.layout())
    rng = np.random.default_rng(seed)
    d, h = spec.input_len, spec.hidden
    flat = np.zeros(spec.weight_count)
    lay = spec.layout()
    a1 = math.sqrt(6.0 / (d + h))
    a2 = math.sqrt(6.0 / (h + 1))
    flat[lay["w1"]] = rng.uniform(-a1, a1, d * h)
    flat[lay["w2"]] = rng.uniform(-a2, a2, h)
    return WeightVector(flat, lay)


def _views(spec: ModelSpec, flat: np.ndarray):
    lay = spec.layout()
    if spec.kind == "linear_ar":
        return flat[lay["w"]], flat[lay["b"]]
    d, h = spec.input_len, spec.hidden
    return (flat[lay["w1"]].reshape(d, h), flat[lay["b1"]], flat[lay["w2"]], flat[lay["b2"]])


def predict_batch(spec: ModelSpec, weights: WeightVector, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    flat = weights.values
    if spec.kind == "linear_ar":
        w, b = _views(spec, flat)
        return kernels.linear_predict(x, w, float(b[0]))
    w1, b1, w2, b2 = _views(spec, flat)
    return kernels.mlp_predict(x, w1, b1, w2, float(b2[0]), ACTIVATIONS[spec.activation])


def predict(spec: ModelSpec, weights: WeightVector, window) -> float:
    """Forecast the next value from one window."""
    vals = window.values if isinstance(window, Subsequence) else np.asarray(window, dtype=np.float64)
    if vals.shape != (spec.input_len,):
        raise DataError(f"window of shape {vals.shape} does not match input_len {spec.input_len}")
    return float(predict_batch(spec, weights, vals[None, :])[0])


def loss(spec: ModelSpec, weights: WeightVector, samples: Sequence[TrainingSample],
         l2: float = 0.0) -> float:
    x, y = stack_samples(samples)
    r = predict_batch(spec, weights, x) - y
    v = weights.values
    return float(r @ r) / len(y) + l2 * float(v @ v)


def gradient(spec: ModelSpec, weights: WeightVector, samples: Sequence[TrainingSample],
             l2: float = 0.0) -> WeightVector:
    """Analytic gradient of loss() with respect to the flat vector."""
    x, y = stack_samples(samples)
    flat = weights.values
    lay = spec.layout()
    out = np.zeros_like(flat)
    if spec.kind == "linear_ar":
        w, b = _views(spec, flat)
        _, gw, gb = kernels.linear_grad(x, y, w, float(b[0]), l2)
        out[lay["w"]] = gw
        out[lay["b"]] = gb
    else:
        w1, b1, w2, b2 = _views(spec, flat)
        _, gw1, gb1, gw2, gb2 = kernels.mlp_grad(x, y, w1, b1, w2, float(b2[0]),
                                                 ACTIVATIONS[spec.activation], l2)
        out[lay["w1"]] = gw1.ravel()
        out[lay["b1"]] = gb1
        out[lay["w2"]] = gw2
        out[lay["b2"]] = gb2
    return WeightVector(out, lay)


def clone_transfer(weights: WeightVector) -> WeightVector:
    """Independent copy of a weight vector; mutation never propagates back."""
    return WeightVector(weights.values.copy(), dict(weights.layout))


def delta(weights: WeightVector, base: WeightVector) -> np.ndarray:
    """Parameter offset of a tuned vector relative to the base vector."""
    if len(weights) != len(base):
        raise ConfigError("weight vectors have different lengths")
    return weights.values - base.values


def _descend(spec: ModelSpec, flat: np.ndarray, x: np.ndarray, y: np.ndarray,
             epochs: int, lr: float, batch_size: int, l2: float,
             rng: np.random.Generator, history: list[float] | None,
             samples: Sequence[TrainingSample]) -> None:
    """Run epochs of mini-batch gradient descent, updating flat in place."""
    act = ACTIVATIONS[spec.activation] if spec.kind == "mlp" else 0
    n = len(y)
    if history is not None:
        history.append(loss(spec, WeightVector(flat.copy(), spec.layout()), samples, l2))
    for epoch in range(epochs):
        order = rng.permutation(n).astype(np.int64)
        if spec.kind == "linear_ar":
            w, b = _views(spec, flat)
            epoch_loss = kernels.linear_sgd_epoch(x, y, order, batch_size, lr, l2, w, b)
        else:
            w1, b1, w2, b2 = _views(spec, flat)
            epoch_loss = kernels.mlp_sgd_epoch(x, y, order, batch_size, lr, l2,
                                               w1, b1, w2, b2, act)
        if not math.isfinite(epoch_loss):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        if history is not None:
            history.append(loss(spec, WeightVector(flat.copy(), spec.layout()), samples, l2))


def train(spec: ModelSpec, config: TrainConfig, samples: Sequence[TrainingSample],
          history: list[float] | None = None) -> WeightVector:
    """Fit base weights on the given samples.

    linear_ar solves the ridge normal equations exactly; the mlp runs
    config.epochs of seeded mini-batch gradient descent from init_weights.
    When history is a list, the full-sample loss is appended before training
    and after every epoch.
    """
    x, y = stack_samples(samples)
    lay = spec.layout()
    if spec.kind == "linear_ar":
        n, d = x.shape
        a = np.hstack([x, np.ones((n, 1))])
        gram = a.T @ a + n * config.l2 * np.eye(d + 1)
        try:
            theta = np.linalg.solve(gram, a.T @ y)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"ridge normal equations are singular: {exc}") from exc
        out = WeightVector(theta, lay)
        if history is not None:
            history.append(loss(spec, out, samples, config.l2))
        return out
    flat = init_weights(spec, config.seed).values.copy()
    rng = np.random.default_rng([config.seed, 0x5E9D])
    _descend(spec, flat, x, y, config.epochs, config.learning_rate,
             config.batch_size, config.l2, rng, history, samples)
    return WeightVector(flat, lay)


def fine_tune(spec: ModelSpec, config: TrainConfig, base_weights: WeightVector,
              samples: Sequence[TrainingSample], history: list[float] | None = None) -> WeightVector:
    """Specialize a copy of base_weights on cluster samples.

    Always gradient descent, for both model kinds, at learning_rate *
    fine_tune_lr_factor for fine_tune_epochs passes. Zero epochs returns an
    identical copy. Deterministic given (spec, config, base_weights, samples).
    """
    flat = base_weights.values.copy()
    if config.fine_tune_epochs == 0:
        return WeightVector(flat, spec.layout())
    x, y = stack_samples(samples)
    rng = np.random.default_rng([config.seed, 0xF17E])
    _descend(spec, flat, x, y, config.fine_tune_epochs,
             config.learning_rate * config.fine_tune_lr_factor,
             config.batch_size, config.l2, rng, history, samples)
    return WeightVector(flat, spec.layout())


def weights_to_dict(spec: ModelSpec, weights: WeightVector) -> dict:
    """JSON-ready form: architecture header plus the flat values."""
    return {
        "kind": spec.kind,
        "input_len": spec.input_len,
        "hidden": spec.hidden,
        "activation": spec.activation,
        "values": [float(v) for v in weights.values],
    }


def weights_from_dict(payload: dict) -> tuple[ModelSpec, WeightVector]:
    try:
        spec = ModelSpec(kind=payload["kind"], input_len=int(payload["input_len"]),
                         hidden=int(payload.get("hidden", 16)),
                         activation=payload.get("activation", "tanh"))
        values = np.asarray(payload["values"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed weight payload: {exc}") from exc
    if len(values) != spec.weight_count:
        raise DataError(f"weight payload has {len(values)} values; {spec.weight_count} expected")
    return spec, WeightVector(values, spec.layout())
