"""Metric series storage, windowing, scaling and Savitzky-Golay smoothing."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TICK_SECONDS = 160
TICKS_PER_DAY = 540

# units whose samples can never be negative
NON_NEGATIVE_UNITS = {"ms", "cpu_pct", "requests", "pods"}


class ConfigError(ValueError):
    """Raised for invalid configuration values."""


@dataclass(frozen=True)
class MetricSeries:
    """Scalar samples on a fixed tick grid.

    ``ticks`` must be strictly increasing integers; ``values`` has the same
    length.  The series is treated as immutable: operations return new
    series rather than editing in place.
    """

    ticks: np.ndarray
    values: np.ndarray
    tick_seconds: int = TICK_SECONDS
    unit: str = ""

    def __post_init__(self):
        ticks = np.asarray(self.ticks, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if ticks.ndim != 1 or values.ndim != 1 or len(ticks) != len(values):
            raise ValueError("ticks and values must be 1-D arrays of equal length")
        if self.tick_seconds <= 0:
            raise ValueError("tick_seconds must be positive")
        if len(ticks) > 1 and np.any(np.diff(ticks) <= 0):
            raise ValueError("tick indices must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("series values must be finite")
        if self.unit in NON_NEGATIVE_UNITS and np.any(values < 0):
            raise ValueError(f"negative sample in a {self.unit!r} series")
        ticks.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "ticks", ticks)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, start_tick: int = 0, tick_seconds: int = TICK_SECONDS,
                    unit: str = "") -> "MetricSeries":
        values = np.asarray(values, dtype=np.float64)
        ticks = np.arange(start_tick, start_tick + len(values), dtype=np.int64)
        return cls(ticks, values, tick_seconds, unit)

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values) -> "MetricSeries":
        return MetricSeries(self.ticks, values, self.tick_seconds, self.unit)

    def tail(self, n: int) -> "MetricSeries":
        return MetricSeries(self.ticks[-n:], self.values[-n:], self.tick_seconds, self.unit)

    def to_csv(self, path=None) -> str:
        text = series_to_csv(self)
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass
class MetricStore:
    """Append-only series written by the simulation clock."""

    tick_seconds: int = TICK_SECONDS
    unit: str = ""
    _ticks: list = field(default_factory=list)
    _values: list = field(default_factory=list)

    def append(self, tick: int, value: float) -> None:
        if self._ticks and tick <= self._ticks[-1]:
            raise ValueError(f"tick {tick} is not after {self._ticks[-1]}")
        self._ticks.append(int(tick))
        self._values.append(float(value))

    def __len__(self) -> int:
        return len(self._values)

    def tail_series(self, n: int) -> MetricSeries:
        return MetricSeries(np.array(self._ticks[-n:], dtype=np.int64),
                            np.array(self._values[-n:], dtype=np.float64),
                            self.tick_seconds, self.unit)

    def snapshot(self) -> MetricSeries:
        return MetricSeries(np.array(self._ticks, dtype=np.int64),
                            np.array(self._values, dtype=np.float64),
                            self.tick_seconds, self.unit)


@dataclass(frozen=True)
class FilterConfig:
    width: int = 11
    order: int = 3

    def __post_init__(self):
        if self.width < 3 or self.width % 2 == 0:
            raise ConfigError(f"filter width must be an odd integer >= 3, got {self.width}")
        if not 0 <= self.order < self.width:
            raise ConfigError(f"filter order must satisfy 0 <= order < width, got {self.order}")


def _fit_matrix(width: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    # positions scaled to [-1, 1] keep the Vandermonde well conditioned
    half = width // 2
    x = np.arange(-half, half + 1) / max(half, 1)
    vander = np.vander(x, order + 1, increasing=True)
    return vander, np.linalg.pinv(vander)


def savgol_smooth(series, cfg: FilterConfig = FilterConfig()):
    """Least-squares polynomial smoothing over a sliding centered window.

    Interior points use the fit over the window centred on them.  The first
    and last ``width // 2`` points are evaluated on the fit of the first
    (resp. last) full window, so no samples are invented past the ends.
    Accepts a MetricSeries (returned as one) or a plain array.
    """
    values = series.values if isinstance(series, MetricSeries) else np.asarray(series, float)
    w, o = cfg.width, cfg.order
    n = len(values)
    if n < w:
        raise ConfigError(f"series of length {n} is shorter than filter width {w}")
    half = w // 2
    vander, fit = _fit_matrix(w, o)
    smoother = vander @ fit          # (w, w): row k evaluates the fit at window slot k
    centre = smoother[half]

    out = np.empty(n)
    if n > 2 * half:
        windows = np.lib.stride_tricks.sliding_window_view(values, w)
        out[half:n - half] = windows @ centre
    out[:half] = smoother[:half] @ values[:w]
    out[n - half:] = smoother[half + 1:] @ values[n - w:]
    if isinstance(series, MetricSeries):
        return series.with_values(out)
    return out


def window_slices(series, lookback: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Every contiguous (input, target) pair, sliding by one tick.

    Returns arrays of shape (count, lookback) and (count, horizon) with
    ``count = len - lookback - horizon + 1``; both are empty when the
    series is too short.
    """
    values = series.values if isinstance(series, MetricSeries) else np.asarray(series, float)
    if lookback <= 0 or horizon <= 0:
        raise ValueError("lookback and horizon must be positive")
    count = len(values) - lookback - horizon + 1
    if count <= 0:
        return np.empty((0, lookback)), np.empty((0, horizon))
    frames = np.lib.stride_tricks.sliding_window_view(values, lookback + horizon)[:count]
    return frames[:, :lookback].copy(), frames[:, lookback:].copy()


@dataclass(frozen=True)
class ScaleParams:
    offset: float
    scale: float


def normalize(values) -> tuple[np.ndarray, ScaleParams]:
    """Min-max scale into [0, 1]; a constant series maps to zeros."""
    arr = values.values if isinstance(values, MetricSeries) else np.asarray(values, float)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty series")
    lo, hi = float(arr.min()), float(arr.max())
    span = hi - lo
    if span == 0:
        return np.zeros_like(arr), ScaleParams(lo, 0.0)
    return (arr - lo) / span, ScaleParams(lo, span)


def denormalize(scaled, params: ScaleParams) -> np.ndarray:
    return np.asarray(scaled, float) * params.scale + params.offset


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def series_to_csv(series: MetricSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["xtick", "value"])
    for t, v in zip(series.ticks, series.values):
        writer.writerow([int(t), _fmt(v)])
    return buf.getvalue()


def series_from_csv(source, tick_seconds: int = TICK_SECONDS, unit: str = "") -> MetricSeries:
    """Parse the two-column ``xtick,value`` format (path or CSV text)."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["xtick", "value"]:
        raise ValueError("expected header 'xtick,value'")
    ticks = [int(r[0]) for r in rows[1:] if r]
    values = [float(r[1]) for r in rows[1:] if r]
    return MetricSeries(np.array(ticks, dtype=np.int64), np.array(values), tick_seconds, unit)
