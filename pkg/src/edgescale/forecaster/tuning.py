"""SLA-violation feedback on the forecaster's hyper-parameters."""

from __future__ import annotations

from dataclasses import replace

from .training import LstmConfig

BATCH_STEP, BATCH_MAX = 10, 200
RATE_STEP, RATE_MIN = 0.0005, 0.002
EPOCH_STEP, EPOCH_MAX = 5, 100


def tune_on_violation(violations: int, cfg: LstmConfig,
                      initial: LstmConfig | None = None) -> LstmConfig:
    """Nudge training after a window with violations, reset after a clean one.

    With ``violations > 0`` the batch size and epoch count grow and the
    learning rate shrinks, each saturating at its bound.  With none, the
    three values return to ``initial`` (the defaults when not given).
    Weights are not touched here; only the configuration changes.  The
    learning rate is rounded to 12 decimals so repeated steps stay on the
    0.0005 grid.
    """
    if violations > 0:
        return replace(cfg,
                       batch_size=min(cfg.batch_size + BATCH_STEP, BATCH_MAX),
                       learning_rate=max(round(cfg.learning_rate - RATE_STEP, 12), RATE_MIN),
                       epochs=min(cfg.epochs + EPOCH_STEP, EPOCH_MAX))
    base = initial if initial is not None else LstmConfig()
    return replace(cfg, batch_size=base.batch_size, learning_rate=base.learning_rate,
                   epochs=base.epochs)


class FeedbackTuner:
    """Remembers the initial configuration so a clean window can restore it."""

    def __init__(self, initial: LstmConfig):
        self.initial = initial
        self.current = initial
        self.trace: list[tuple[int, LstmConfig]] = []

    def observe(self, violations: int) -> LstmConfig:
        self.current = tune_on_violation(violations, self.current, self.initial)
        self.trace.append((violations, self.current))
        return self.current
