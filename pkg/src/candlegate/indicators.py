"""Window statistics, candle geometry, percentile ranks, and trend lines.

Support/resistance lines are least-squares fits through the window lows/highs,
shifted so the line becomes a touching envelope (no low below the support line,
no high above the resistance line).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market_data import Candle, Window

SUPPORT = "support"
RESISTANCE = "resistance"


@dataclass(frozen=True)
class WindowStats:
    min: float
    max: float
    mean: float


@dataclass(frozen=True)
class TrendLine:
    """Line ``value(k) = intercept + slope * k`` over some integer step axis.

    Fitted lines use window indices as the axis; resample_line converts to a
    coarser sampling axis spanning the same window.
    """

    slope: float
    intercept: float
    kind: str

    def value_at(self, step: float) -> float:
        return self.intercept + self.slope * step


@dataclass(frozen=True)
class CandleGeometry:
    """Decomposition of a candle: range = body + lower_tail + upper_tail."""

    range: float
    body: float
    lower_tail: float
    upper_tail: float


def window_stats(w: Window) -> WindowStats:
    """Min / max / mean of the window closes."""
    closes = w.closes
    return WindowStats(float(closes.min()), float(closes.max()), float(closes.mean()))


def _fit_envelope(values: np.ndarray, kind: str) -> TrendLine:
    if len(values) < 2:
        raise ValueError(f"need at least 2 candles to fit a line, got {len(values)}")
    idx = np.arange(len(values), dtype=np.float64)
    slope, intercept = np.polyfit(idx, values, 1)
    line = intercept + slope * idx
    if kind == SUPPORT:
        shift = float(np.min(values - line))
    else:
        shift = float(np.max(values - line))
    return TrendLine(slope=float(slope), intercept=float(intercept + shift), kind=kind)


def fit_support_line(w: Window) -> TrendLine:
    """Lower envelope: regression slope through the lows, anchored at the lowest residual."""
    return _fit_envelope(w.lows, SUPPORT)


def fit_resistance_line(w: Window) -> TrendLine:
    """Upper envelope: regression slope through the highs, anchored at the highest residual."""
    return _fit_envelope(w.highs, RESISTANCE)


def resample_line(line: TrendLine, window_len: int, samples: int) -> TrendLine:
    """Re-express a window-indexed line as `samples` points spanning the window.

    Sample k of the result sits at window index k * (window_len-1) / (samples-1),
    so the first/last samples coincide with the line at the window edges.
    """
    if window_len < 1 or samples < 1:
        raise ValueError("window_len and samples must be >= 1")
    if samples == 1:
        return TrendLine(slope=0.0, intercept=line.intercept, kind=line.kind)
    step = line.slope * (window_len - 1) / (samples - 1)
    return TrendLine(slope=step, intercept=line.intercept, kind=line.kind)


def sample_line(line: TrendLine, steps: int) -> list[float]:
    """Evaluate the line at steps 0..steps-1."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return [line.intercept + line.slope * k for k in range(steps)]


def percentile_rank(values, x: float) -> float:
    """Fraction of values <= x. 'In the top q' of a window means rank >= 1 - q."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("percentile_rank of empty values")
    return float(np.count_nonzero(values <= x)) / values.size


def candle_geometry(c: Candle) -> CandleGeometry:
    body_top = max(c.open, c.close)
    body_bottom = min(c.open, c.close)
    return CandleGeometry(
        range=c.high - c.low,
        body=body_top - body_bottom,
        lower_tail=body_bottom - c.low,
        upper_tail=c.high - body_top,
    )


def realized_volatility(w: Window) -> float:
    """Sample standard deviation of one-step fractional close changes."""
    closes = w.closes
    if len(closes) < 2:
        raise ValueError(f"need at least 2 candles for volatility, got {len(closes)}")
    rets = closes[1:] / closes[:-1] - 1.0
    return float(np.std(rets, ddof=1)) if rets.size > 1 else 0.0
