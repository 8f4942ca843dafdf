from .lstm import ForecastModel, lstm_forward
from .training import (Forecaster, InsufficientDataError, LstmConfig, TrainingOutcome,
                       accept_if_better, forecast_cycle, train)
from .tuning import FeedbackTuner, tune_on_violation
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ForecastModel", "lstm_forward", "Forecaster", "InsufficientDataError", "LstmConfig",
    "TrainingOutcome", "accept_if_better", "forecast_cycle", "train", "FeedbackTuner",
    "tune_on_violation", "load_checkpoint", "save_checkpoint",
]
