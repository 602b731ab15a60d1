"""Hoeffding-bound monitor for routing-distance drift.

The monitor watches the selection distance d_t of each streamed window and
keeps the last `window` deviations d_t - reference in a ring buffer. With R
the empirical min-to-max range inside that buffer, the bound

    epsilon = sqrt(R^2 * ln(1 / confidence) / (2 * window))

contains the divergence of the sample mean from the in-control mean with
probability 1 - confidence per side. A drift verdict fires when the buffer
is full and |mean(deviations)| exceeds epsilon. Exactly one verdict fires
per exceedance: the monitor latches and must be reset by the caller.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import ConfigError


def hoeffding_epsilon(value_range: float, confidence: float, window: int) -> float:
    """Closed-form divergence bound for a bounded variable's sample mean."""
    if value_range < 0:
        raise ConfigError(f"value_range must be non-negative, got {value_range}")
    if not 0 < confidence < 1:
        raise ConfigError(f"confidence must be in (0, 1), got {confidence}")
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    return math.sqrt(value_range * value_range * math.log(1.0 / confidence) / (2.0 * window))


@dataclass(frozen=True)
class DriftVerdict:
    drifted: bool
    mean_delta: float
    epsilon: float
    window_full: bool


class DriftDetector:
    """Single-writer sequential monitor; not shareable mid-stream.

    reference is the in-control selection distance. Callers feed every
    observed distance through observe(); after a drifted verdict the
    detector stays quiet until reset().
    """

    def __init__(self, reference: float, window: int = 30, confidence: float = 0.05) -> None:
        if window < 1:
            raise ConfigError(f"window must be >= 1, got {window}")
        if not 0 < confidence < 1:
            raise ConfigError(f"confidence must be in (0, 1), got {confidence}")
        if not math.isfinite(reference):
            raise ConfigError(f"reference must be finite, got {reference}")
        self.reference = float(reference)
        self.window = int(window)
        self.confidence = float(confidence)
        self._deviations: deque[float] = deque(maxlen=self.window)
        self._fired = False
        self.steps_since_reset = 0

    @property
    def window_full(self) -> bool:
        return len(self._deviations) == self.window

    @property
    def observed_range(self) -> float:
        if not self._deviations:
            return 0.0
        return max(self._deviations) - min(self._deviations)

    def observe(self, distance: float) -> DriftVerdict:
        """Push one selection distance; returns the current verdict."""
        if not math.isfinite(distance):
            raise ConfigError(f"distance must be finite, got {distance}")
        self._deviations.append(float(distance) - self.reference)
        self.steps_since_reset += 1
        mean_delta = abs(sum(self._deviations) / len(self._deviations))
        eps = hoeffding_epsilon(self.observed_range, self.confidence, self.window)
        full = self.window_full
        drifted = full and not self._fired and mean_delta > eps
        if drifted:
            self._fired = True
        return DriftVerdict(drifted=drifted, mean_delta=mean_delta, epsilon=eps, window_full=full)

    def reset(self, reference: float | None = None) -> None:
        """Clear the buffer and latch; optionally move the reference."""
        if reference is not None:
            if not math.isfinite(reference):
                raise ConfigError(f"reference must be finite, got {reference}")
            self.reference = float(reference)
        self._deviations.clear()
        self._fired = False
        self.steps_since_reset = 0
