"""Synthetic daily request traces with lognormal-shaped peaks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .timeseries import TICK_SECONDS, TICKS_PER_DAY, ConfigError, MetricSeries, series_from_csv


@dataclass(frozen=True)
class Peak:
    """One lognormal bump: ``amplitude * exp(-ln(t / center)^2 / (2 width^2))``.

    ``center`` is a tick of the day, ``width`` the log-space spread.
    """

    center: float
    width: float
    amplitude: float

    def __post_init__(self):
        if self.center <= 0 or self.width <= 0:
            raise ConfigError("peak center and width must be positive")
        if self.amplitude < 0:
            raise ConfigError("peak amplitude must be non-negative")


DEFAULT_PEAKS = (
    Peak(170.0, 0.22, 1410.0),   # morning, ~07:30
    Peak(300.0, 0.18, 555.0),    # afternoon plateau
    Peak(430.0, 0.15, 1920.0),   # evening, ~19:00
)

# day 0 of a trace is a Saturday
DEFAULT_WEEKDAYS = (0.7, 0.7, 0.8, 1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class WorkloadProfile:
    base_rate: float = 150.0
    peaks: tuple = DEFAULT_PEAKS
    weekday_multipliers: tuple = DEFAULT_WEEKDAYS
    noise_sigma: float = 0.1
    seed: int = 0
    ticks_per_day: int = field(default=TICKS_PER_DAY)

    def __post_init__(self):
        peaks = tuple(p if isinstance(p, Peak) else Peak(**p) for p in self.peaks)
        object.__setattr__(self, "peaks", peaks)
        object.__setattr__(self, "weekday_multipliers", tuple(float(m) for m in self.weekday_multipliers))
        if self.base_rate < 0:
            raise ConfigError("base_rate must be non-negative")
        if len(self.weekday_multipliers) != 7 or min(self.weekday_multipliers) < 0:
            raise ConfigError("weekday_multipliers needs 7 non-negative values")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if self.ticks_per_day != TICKS_PER_DAY:
            raise ConfigError(f"a day is exactly {TICKS_PER_DAY} ticks")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["peaks"] = [asdict(p) for p in self.peaks]
        d["weekday_multipliers"] = list(self.weekday_multipliers)
        return d


def _bumps(profile: WorkloadProfile, tau: np.ndarray) -> np.ndarray:
    out = np.zeros_like(tau)
    for p in profile.peaks:
        out += p.amplitude * np.exp(-np.log(tau / p.center) ** 2 / (2 * p.width ** 2))
    return out


def daily_parts(profile: WorkloadProfile) -> tuple[np.ndarray, np.ndarray]:
    """(own, carry): the day's own peaks and the previous day's tails past midnight."""
    tau = np.arange(profile.ticks_per_day) + 0.5
    return _bumps(profile, tau), _bumps(profile, tau + profile.ticks_per_day)


def daily_curve(profile: WorkloadProfile, multiplier: float = 1.0,
                previous_multiplier: float | None = None) -> np.ndarray:
    """Noise-free request rate per tick.

    The base rate and the day's own peaks scale with ``multiplier``; the
    right tails of yesterday's peaks that run past midnight scale with
    ``previous_multiplier`` (defaults to the same value).
    """
    if previous_multiplier is None:
        previous_multiplier = multiplier
    own, carry = daily_parts(profile)
    return multiplier * (profile.base_rate + own) + previous_multiplier * carry


def generate_day(profile: WorkloadProfile, day_index: int) -> MetricSeries:
    """Integer request counts for one day, deterministic in (seed, day_index)."""
    if day_index < 0:
        raise ValueError("day_index must be non-negative")
    weekdays = profile.weekday_multipliers
    rate = daily_curve(profile, weekdays[day_index % 7], weekdays[(day_index - 1) % 7])
    if profile.noise_sigma > 0:
        rng = np.random.default_rng([profile.seed, day_index])
        s = profile.noise_sigma
        # mean-one multiplicative noise
        rate = rate * rng.lognormal(-0.5 * s * s, s, len(rate))
    counts = np.rint(rate)
    start = day_index * profile.ticks_per_day
    return MetricSeries.from_values(counts, start, TICK_SECONDS, "requests")


def generate_trace(profile: WorkloadProfile, days: int) -> MetricSeries:
    if days < 1:
        raise ValueError("days must be at least 1")
    parts = [generate_day(profile, d).values for d in range(days)]
    return MetricSeries.from_values(np.concatenate(parts), 0, TICK_SECONDS, "requests")


def load_trace(source) -> MetricSeries:
    """Read a recorded trace in the two-column CSV format."""
    return series_from_csv(source, TICK_SECONDS, "requests")
