"""Versioned ``.npz`` checkpoints: every weight array plus config and gate state."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .lstm import ForecastModel
from .training import LstmConfig

FORMAT_VERSION = 1


def save_checkpoint(path, model: ForecastModel, cfg: LstmConfig) -> Path:
    path = Path(path)
    meta = dict(version=FORMAT_VERSION, lookback=model.lookback, horizon=model.horizon,
                hidden=list(model.hidden), input_dim=model.input_dim,
                best_validation_loss=model.best_validation_loss,
                trained_epoch_count=model.trained_epoch_count, config=cfg.to_dict())
    arrays = {f"param/{k}": v for k, v in model.params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)
    return path


def load_checkpoint(path) -> tuple[ForecastModel, LstmConfig]:
    with np.load(Path(path), allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        params = {k[len("param/"):]: data[k].copy() for k in data.files if k.startswith("param/")}
    model = ForecastModel(meta["lookback"], meta["horizon"], meta["hidden"],
                          meta["input_dim"], seed=None)
    if params.keys() != model.params.keys():
        raise ValueError("checkpoint parameters do not match the declared structure")
    model.params = params
    model.best_validation_loss = float(meta["best_validation_loss"])
    model.trained_epoch_count = int(meta["trained_epoch_count"])
    return model, LstmConfig(**meta["config"])
