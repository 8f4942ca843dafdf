"""Training loop, validation gate and the daily forecast cycle."""

from __future__ import annotations

import hashlib
import math
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import timeseries as ts
from ..timeseries import ConfigError, FilterConfig, MetricSeries
from .lstm import ForecastModel, lstm_forward, mse, mse_loss_and_grad


class InsufficientDataError(RuntimeError):
    """Not enough history to build a single training slice."""


@dataclass(frozen=True)
class LstmConfig:
    lookback: int = 10
    horizon: int = 540
    hidden: tuple = (50, 50, 50)
    dropout: float = 0.2
    learning_rate: float = 0.005
    epochs: int = 75
    batch_size: int = 100
    early_stop_patience: int = 10
    validation_fraction: float = 0.2
    preprocess: bool = True
    filter: FilterConfig = FilterConfig()

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if isinstance(self.filter, dict):
            object.__setattr__(self, "filter", FilterConfig(**self.filter))
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 0 < self.epochs <= 100:
            raise ConfigError(f"epochs must be in [1, 100], got {self.epochs}")
        if self.lookback < 1 or self.horizon < 1:
            raise ConfigError("lookback and horizon must be positive")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.batch_size < 1 or self.early_stop_patience < 1:
            raise ConfigError("batch_size and early_stop_patience must be positive")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigError("validation_fraction must be in [0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class TrainingOutcome:
    model: ForecastModel
    validation_loss: float
    epochs_run: int
    stopped_early: bool
    train_losses: list = field(default_factory=list)
    validation_losses: list = field(default_factory=list)


class Adam:
    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * math.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for k, p in self.params.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            p -= (lr_t * m / (np.sqrt(v) + self.eps)).astype(p.dtype, copy=False)


class EarlyStopping:
    """Stop once the monitored loss has not improved for ``patience`` epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.wait = 0

    def update(self, loss: float) -> bool:
        if loss < self.best:
            self.best = loss
            self.wait = 0
            return False
        self.wait += 1
        return self.wait >= self.patience


def split_slices(X, Y, validation_fraction: float):
    """Chronological split: the last fraction of slices is held out."""
    n = len(X)
    n_val = int(n * validation_fraction)
    if n_val == 0:
        return X, Y, X, Y
    return X[:-n_val], Y[:-n_val], X[-n_val:], Y[-n_val:]


def train(model: ForecastModel, X, Y, cfg: LstmConfig, seed: int = 0) -> TrainingOutcome:
    """Warm-started mini-batch Adam training with early stopping.

    The candidate starts from a copy of ``model``'s weights; ``model``
    itself is left untouched.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    if len(X) == 0:
        raise InsufficientDataError("no training slices available")
    if X.shape[1] != model.lookback or Y.shape[1] != model.horizon:
        raise ValueError("slice shapes do not match the model")
    dtype = model.dtype
    X = X.astype(dtype)
    Y = Y.astype(dtype)
    X_tr, Y_tr, X_val, Y_val = split_slices(X, Y, cfg.validation_fraction)

    candidate = model.copy()
    rng = np.random.default_rng(seed)
    opt = Adam(candidate.params, cfg.learning_rate)
    stopper = EarlyStopping(cfg.early_stop_patience)
    train_losses, val_losses = [], []
    stopped = False
    epochs_run = 0
    best_params, best_loss = None, math.inf
    for _ in range(cfg.epochs):
        order = rng.permutation(len(X_tr))
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = mse_loss_and_grad(candidate.params, candidate.hidden,
                                            X_tr[idx], Y_tr[idx], cfg.dropout, rng)
            opt.step(grads)
            batch_losses.append(loss * len(idx))
        epochs_run += 1
        train_losses.append(sum(batch_losses) / len(order))
        val_losses.append(mse(candidate, X_val, Y_val))
        if val_losses[-1] < best_loss:
            best_loss = val_losses[-1]
            best_params = {k: v.copy() for k, v in candidate.params.items()}
        if stopper.update(val_losses[-1]):
            stopped = True
            break
    # keep the weights of the best validation epoch
    if best_params is not None:
        candidate.params.update(best_params)
    candidate.trained_epoch_count += epochs_run
    return TrainingOutcome(candidate, min(val_losses), epochs_run, stopped,
                           train_losses, val_losses)


def accept_if_better(current: ForecastModel, outcome: TrainingOutcome) -> ForecastModel:
    """Adopt the candidate only on a strict validation-loss improvement."""
    if not current.same_structure(outcome.model):
        raise ValueError("candidate model has a different structure")
    if outcome.validation_loss < current.best_validation_loss:
        adopted = outcome.model
        adopted.best_validation_loss = outcome.validation_loss
        return adopted
    return current


def preprocess(values, cfg: LstmConfig) -> tuple[np.ndarray, ts.ScaleParams]:
    values = np.asarray(values, float)
    if cfg.preprocess:
        values = ts.savgol_smooth(values, cfg.filter)
    return ts.normalize(values)


def build_model(cfg: LstmConfig, seed: int) -> ForecastModel:
    return ForecastModel(cfg.lookback, cfg.horizon, cfg.hidden, seed=seed)


@dataclass
class CycleResult:
    model: ForecastModel
    forecast: MetricSeries
    outcome: TrainingOutcome | None = None
    accepted: bool = False
    scale: ts.ScaleParams | None = None


def _empty_forecast(series: MetricSeries) -> MetricSeries:
    start = int(series.ticks[-1]) + 1 if len(series) else 0
    return MetricSeries.from_values([], start, series.tick_seconds, series.unit)


def forecast_cycle(series: MetricSeries, model: ForecastModel | None, cfg: LstmConfig,
                   seed: int = 0) -> CycleResult:
    """One daily pass: preprocess, window, train, gate, predict.

    Returns an empty forecast (and the model unchanged) while there is not
    enough history for a single training slice.  ``model=None`` builds a
    fresh network; later calls warm-start from the model passed in.
    """
    values = series.values
    if len(values) < cfg.lookback + cfg.horizon:
        return CycleResult(model, _empty_forecast(series))
    scaled, scale = preprocess(values, cfg)
    X, Y = ts.window_slices(scaled, cfg.lookback, cfg.horizon)
    if model is None:
        model = build_model(cfg, seed)
    outcome = train(model, X, Y, cfg, seed)
    updated = accept_if_better(model, outcome)
    pred = lstm_forward(updated, scaled[-cfg.lookback:])
    pred = np.maximum(ts.denormalize(pred, scale), 0.0)
    forecast = MetricSeries.from_values(pred, int(series.ticks[-1]) + 1,
                                        series.tick_seconds, series.unit)
    return CycleResult(updated, forecast, outcome, updated is outcome.model, scale)


def predict_from(model: ForecastModel, series: MetricSeries, scale: ts.ScaleParams,
                 cfg: LstmConfig) -> MetricSeries:
    """Forecast the next ``horizon`` ticks from the tail of ``series``.

    Reuses the scaling of the last training cycle so the network sees
    inputs on the grid it was trained on.  Smoothing (when enabled) runs on
    a short tail, so the newest samples use the one-sided edge fit.
    """
    need = max(cfg.lookback, cfg.filter.width) if cfg.preprocess else cfg.lookback
    if len(series) < need:
        return _empty_forecast(series)
    tail = series.values[-max(need, 4 * cfg.filter.width):]
    if cfg.preprocess:
        tail = ts.savgol_smooth(tail, cfg.filter)
    window = tail[-cfg.lookback:]
    scaled = (window - scale.offset) / scale.scale if scale.scale > 0 else window - scale.offset
    pred = np.maximum(ts.denormalize(lstm_forward(model, scaled), scale), 0.0)
    return MetricSeries.from_values(pred, int(series.ticks[-1]) + 1,
                                    series.tick_seconds, series.unit)


def _digest(series: MetricSeries, model: ForecastModel | None, cfg: LstmConfig, seed: int) -> str:
    h = hashlib.sha256()
    h.update(series.ticks.tobytes())
    h.update(series.values.tobytes())
    h.update(repr((cfg.to_dict(), seed)).encode())
    if model is not None:
        h.update(repr(model.best_validation_loss).encode())
        for k in sorted(model.params):
            h.update(model.params[k].tobytes())
    return h.hexdigest()


class Forecaster:
    """Stateful daily forecaster with an atomic forecast handoff.

    At most one training cycle is in flight.  ``latest`` is swapped as a
    whole, so readers see either the previous or the new forecast.  An
    optional ``cache`` (any mapping) memoizes cycles on their exact inputs.
    """

    def __init__(self, cfg: LstmConfig, seed: int = 0, cache: dict | None = None):
        self.cfg = cfg
        self.seed = seed
        self.model: ForecastModel | None = None
        self.scale: ts.ScaleParams | None = None
        self.latest: MetricSeries | None = None
        self.history: list = []
        self.cache = cache
        self._lock = threading.Lock()
        self._executor: ThreadPoolExecutor | None = None
        self._pending: Future | None = None

    def run_cycle(self, series: MetricSeries) -> MetricSeries:
        cycle_seed = self.seed * 1000 + len(self.history)
        key = None
        if self.cache is not None:
            key = _digest(series, self.model, self.cfg, cycle_seed)
            result = self.cache.get(key)
        else:
            result = None
        if result is None:
            result = forecast_cycle(series, self.model, self.cfg, cycle_seed)
            if key is not None:
                self.cache[key] = result
        with self._lock:
            self.model = result.model.copy() if result.model is not None else None
            if result.scale is not None:
                self.scale = result.scale
            self.latest = result.forecast
            self.history.append(dict(
                cfg=self.cfg, samples=len(series), forecast_len=len(result.forecast),
                validation_loss=None if result.outcome is None else result.outcome.validation_loss,
                epochs_run=None if result.outcome is None else result.outcome.epochs_run,
                accepted=result.accepted))
        return result.forecast

    def refresh(self, series: MetricSeries) -> MetricSeries | None:
        """Re-predict from the newest samples with the current model (no training)."""
        with self._lock:
            model, scale = self.model, self.scale
        if model is None or scale is None:
            return None
        forecast = predict_from(model, series, scale, self.cfg)
        if len(forecast):
            with self._lock:
                self.latest = forecast
        return forecast

    def submit(self, series: MetricSeries) -> bool:
        """Start a background cycle; returns False if one is already running."""
        with self._lock:
            if self._pending is not None and not self._pending.done():
                return False
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=1)
            self._pending = self._executor.submit(self.run_cycle, series)
            return True

    def wait(self) -> None:
        if self._pending is not None:
            self._pending.result()

    def value_at(self, tick: int) -> float | None:
        forecast = self.latest
        if forecast is None or len(forecast) == 0:
            return None
        pos = tick - int(forecast.ticks[0])
        if 0 <= pos < len(forecast):
            return float(forecast.values[pos])
        return None
