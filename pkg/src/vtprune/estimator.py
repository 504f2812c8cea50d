"""Estimate the current timestep's action-attention scores from recent history.

Action decode attention for the current frame is not available when the
prefill pass runs, but manipulation exhibits strong short-term temporal
continuity, so the current scores are forecast from the last few frames.
Two smoothers are provided:

* exponential moving average:  est_t = (1 - alpha) * est_{t-1} + alpha * obs_{t-1},
  with the accumulator initialized to the first observation;
* decaying window average:     est_t = sum_{i=1..w} gamma^i * obs_{t-i}.

The window weights are deliberately left unnormalized (their sum is not 1):
downstream consumers rank patches by top-k, which is invariant under positive
scaling, so normalizing would only add arithmetic.

An episode is "warm" once ``window`` observations have been recorded; before
that the selection layer applies its warm-up policy instead of trusting the
estimate.  Episode boundaries must create a fresh state: no smoothing crosses
episodes.  A state is single-writer; distinct episodes can run in parallel.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeMismatchError


class SmoothingMode(str, enum.Enum):
    EMA = "ema"
    DECAY_WINDOW = "window"


@dataclass(frozen=True)
class EstimatorConfig:
    """Smoothing parameters. Defaults: decaying window, w=3, gamma=0.8."""

    mode: SmoothingMode = SmoothingMode.DECAY_WINDOW
    alpha: float = 0.5
    window: int = 3
    gamma: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "mode", SmoothingMode(self.mode))
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")


@dataclass
class EstimatorState:
    """Per-episode ring buffer of observed score vectors plus the EMA accumulator."""

    config: EstimatorConfig = field(default_factory=EstimatorConfig)
    history: deque = field(init=False)
    ema_value: np.ndarray | None = field(init=False, default=None)
    frames_seen: int = field(init=False, default=0)

    def __post_init__(self):
        self.history = deque(maxlen=self.config.window)

    @property
    def m(self) -> int | None:
        """Score-vector length, or None before the first observation."""
        return None if not self.history else self.history[0].shape[0]

    def observe(self, scores: np.ndarray):
        """Record one frame's observed action scores (newest last in history)."""
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim != 1:
            raise ShapeMismatchError("observed scores", "1-D vector", scores.shape)
        if self.m is not None and scores.shape[0] != self.m:
            raise ShapeMismatchError("observed scores", (self.m,), scores.shape)
        scores = scores.copy()
        self.history.append(scores)
        a = self.config.alpha
        if self.ema_value is None:
            self.ema_value = scores.copy()
        else:
            self.ema_value = (1.0 - a) * self.ema_value + a * scores
        self.frames_seen += 1

    def is_warm(self, window: int | None = None) -> bool:
        """True once at least ``window`` frames have been observed."""
        w = self.config.window if window is None else window
        return self.frames_seen >= w

    def ema_estimate(self) -> np.ndarray:
        """Current EMA value; requires at least one observation."""
        if self.ema_value is None:
            raise ConfigError("EMA estimate requested before any observation")
        return self.ema_value.copy()

    def window_estimate(self) -> np.ndarray:
        """Decaying window average sum_{i=1..w} gamma^i * obs_{t-i}.

        With fewer than ``window`` observations the sum truncates to the
        available terms (warm-up gating is the caller's job, via is_warm).
        """
        if not self.history:
            raise ConfigError("window estimate requested before any observation")
        gamma = self.config.gamma
        est = np.zeros_like(self.history[-1])
        for i, obs in enumerate(reversed(self.history), start=1):
            est += (gamma**i) * obs
        return est

    def estimate(self) -> np.ndarray:
        """Dispatch on the configured smoothing mode."""
        if self.config.mode is SmoothingMode.EMA:
            return self.ema_estimate()
        return self.window_estimate()
