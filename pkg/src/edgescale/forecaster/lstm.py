"""Stacked LSTM with a dense multi-step head, forward and backward in numpy.

Layout follows the usual Keras convention: every LSTM layer has an input
kernel ``W`` (in, 4h), a recurrent kernel ``U`` (h, 4h) and a bias ``b``
(4h,), gates ordered input, forget, cell, output.  All but the last LSTM
layer return full sequences and are followed by dropout; the last one
returns its final hidden state, which feeds the dense output layer.
"""

from __future__ import annotations

import math

import numpy as np


class ForecastModel:
    """Weights of the stacked network plus the bookkeeping the gate needs."""

    def __init__(self, lookback: int = 10, horizon: int = 540, hidden=(50, 50, 50),
                 input_dim: int = 1, seed: int | None = 0, zero: bool = False,
                 dtype=np.float32):
        if lookback <= 0 or horizon <= 0:
            raise ValueError("lookback and horizon must be positive")
        self.lookback = int(lookback)
        self.horizon = int(horizon)
        self.hidden = tuple(int(h) for h in hidden)
        self.input_dim = int(input_dim)
        self.best_validation_loss = math.inf
        self.trained_epoch_count = 0
        self.params: dict[str, np.ndarray] = {}

        rng = np.random.default_rng(seed)
        fan_in = self.input_dim
        for k, h in enumerate(self.hidden, start=1):
            bound = 1.0 / math.sqrt(h)
            self.params[f"lstm{k}.W"] = rng.uniform(-bound, bound, (fan_in, 4 * h))
            self.params[f"lstm{k}.U"] = rng.uniform(-bound, bound, (h, 4 * h))
            self.params[f"lstm{k}.b"] = rng.uniform(-bound, bound, 4 * h)
            fan_in = h
        bound = 1.0 / math.sqrt(fan_in)
        self.params["dense.W"] = rng.uniform(-bound, bound, (fan_in, self.horizon))
        self.params["dense.b"] = rng.uniform(-bound, bound, self.horizon)
        for name, p in self.params.items():
            self.params[name] = p.astype(dtype)
            if zero:
                self.params[name][...] = 0.0

    # -- structure -------------------------------------------------------
    def parameter_counts(self) -> dict[str, int]:
        counts = {}
        for k in range(1, len(self.hidden) + 1):
            counts[f"lstm_{k}"] = sum(self.params[f"lstm{k}.{n}"].size for n in "WUb")
        counts["dense"] = self.params["dense.W"].size + self.params["dense.b"].size
        return counts

    @property
    def dtype(self):
        return self.params["dense.W"].dtype

    @property
    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def same_structure(self, other: "ForecastModel") -> bool:
        return (self.params.keys() == other.params.keys()
                and all(self.params[k].shape == other.params[k].shape for k in self.params))

    def copy(self) -> "ForecastModel":
        clone = ForecastModel.__new__(ForecastModel)
        clone.__dict__.update(self.__dict__)
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone

    # -- inference -------------------------------------------------------
    def predict(self, windows) -> np.ndarray:
        """Batch prediction, dropout disabled. ``windows`` is (B, lookback)."""
        windows = np.asarray(windows, dtype=self.dtype)
        if windows.ndim != 2 or windows.shape[1] != self.lookback:
            raise ValueError(f"expected input windows of length {self.lookback}, "
                             f"got shape {windows.shape}")
        out, _ = forward(self.params, self.hidden, windows)
        return out.astype(np.float64)


def lstm_forward(model: ForecastModel, window) -> np.ndarray:
    """Forecast the next ``horizon`` values from one normalized window."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1 or len(window) != model.lookback:
        raise ValueError(f"input window must have length {model.lookback}, got {window.shape}")
    return model.predict(window[None, :])[0]


def _gate_constants(h: int, dtype):
    # sigmoid(x) = (1 + tanh(x / 2)) / 2 for the i, f, o blocks; plain tanh for the cell block
    pre = np.full(4 * h, 0.5, dtype=dtype)
    pre[2 * h:3 * h] = 1.0
    shift = np.full(4 * h, 0.5, dtype=dtype)
    shift[2 * h:3 * h] = 0.0
    # derivative of each activation written as (1 - a) * (a + tanh_flag)
    tanh_flag = np.zeros(4 * h, dtype=dtype)
    tanh_flag[2 * h:3 * h] = 1.0
    return pre, shift, tanh_flag


def forward(params, hidden, X, dropout: float = 0.0, rng=None):
    """Run the network on a batch; returns predictions and a backward cache.

    Dropout is applied (inverted scaling) only when ``dropout > 0``.
    Internals are time-major, (L, B, ...), so per-step slices are contiguous.
    Arithmetic runs in the dtype of the parameters.
    """
    dtype = params["dense.W"].dtype
    B, L = X.shape
    seq = np.ascontiguousarray(np.asarray(X, dtype=dtype).T)[:, :, None]   # (L, B, 1)
    layers = []
    n_layers = len(hidden)
    for k, h in enumerate(hidden, start=1):
        W, U, b = params[f"lstm{k}.W"], params[f"lstm{k}.U"], params[f"lstm{k}.b"]
        pre, shift, _ = _gate_constants(h, dtype)
        acts = (seq.reshape(L * B, -1) @ W + b).reshape(L, B, 4 * h)   # activated in place
        C = np.empty((L, B, h), dtype=dtype)
        TC = np.empty((L, B, h), dtype=dtype)
        H = np.empty((L, B, h), dtype=dtype)
        h_t = np.zeros((B, h), dtype=dtype)
        c_t = np.zeros((B, h), dtype=dtype)
        for t in range(L):
            z = acts[t]
            z += h_t @ U
            z *= pre
            np.tanh(z, out=z)
            z *= pre
            z += shift
            c_t = z[:, h:2 * h] * c_t
            c_t += z[:, :h] * z[:, 2 * h:3 * h]
            C[t] = c_t
            np.tanh(c_t, out=TC[t])
            np.multiply(z[:, 3 * h:], TC[t], out=H[t])
            h_t = H[t]
        mask = None
        out_seq = H
        if k < n_layers and dropout > 0.0:
            keep = 1.0 - dropout
            mask = ((rng.random(H.shape) < keep) / keep).astype(dtype)
            out_seq = H * mask
        layers.append(dict(inp=seq, acts=acts, C=C, TC=TC, H=H, mask=mask))
        seq = out_seq
    last = seq[-1]
    y = last @ params["dense.W"] + params["dense.b"]
    return y, dict(layers=layers, last=last, hidden=hidden)


def backward(params, cache, dy) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss given ``dy = dLoss/dprediction``."""
    dtype = params["dense.W"].dtype
    dy = np.asarray(dy, dtype=dtype)
    grads = {}
    last = cache["last"]
    grads["dense.W"] = last.T @ dy
    grads["dense.b"] = dy.sum(axis=0)
    hidden = cache["hidden"]
    layers = cache["layers"]
    L, B, _ = layers[-1]["H"].shape
    d_out = None
    d_last = dy @ np.ascontiguousarray(params["dense.W"].T)

    for k in range(len(hidden), 0, -1):
        lay = layers[k - 1]
        h = hidden[k - 1]
        W_T = np.ascontiguousarray(params[f"lstm{k}.W"].T)
        U_T = np.ascontiguousarray(params[f"lstm{k}.U"].T)
        _, _, tanh_flag = _gate_constants(h, dtype)
        acts, C, TC, H = lay["acts"], lay["C"], lay["TC"], lay["H"]
        deriv = (1.0 - acts) * (acts + tanh_flag)         # activation slopes, (L, B, 4h)
        dZ = np.empty((L, B, 4 * h), dtype=dtype)
        dh_next = np.zeros((B, h), dtype=dtype)
        dc_next = np.zeros((B, h), dtype=dtype)
        for t in range(L - 1, -1, -1):
            if d_out is not None:
                dh = d_out[t] + dh_next
            elif t == L - 1:
                dh = d_last + dh_next
            else:
                dh = dh_next
            a = acts[t]
            tc = TC[t]
            dc = dh * a[:, 3 * h:] * (1.0 - tc * tc)
            dc += dc_next
            dz = dZ[t]
            np.multiply(dc, a[:, 2 * h:3 * h], out=dz[:, :h])
            if t > 0:
                np.multiply(dc, C[t - 1], out=dz[:, h:2 * h])
            else:
                dz[:, h:2 * h] = 0.0
            np.multiply(dc, a[:, :h], out=dz[:, 2 * h:3 * h])
            np.multiply(dh, tc, out=dz[:, 3 * h:])
            dz *= deriv[t]
            dc_next = dc * a[:, h:2 * h]
            dh_next = dz @ U_T
        inp = lay["inp"]
        flat_dZ = dZ.reshape(L * B, 4 * h)
        grads[f"lstm{k}.W"] = inp.reshape(L * B, -1).T @ flat_dZ
        grads[f"lstm{k}.U"] = H[:-1].reshape((L - 1) * B, h).T @ dZ[1:].reshape((L - 1) * B, 4 * h)
        grads[f"lstm{k}.b"] = flat_dZ.sum(axis=0)
        if k > 1:
            d_in = (flat_dZ @ W_T).reshape(L, B, -1)
            below_mask = layers[k - 2]["mask"]
            d_out = d_in * below_mask if below_mask is not None else d_in
    return grads


def mse_loss_and_grad(params, hidden, X, Y, dropout: float = 0.0, rng=None):
    """Mean squared error over all outputs, with its gradients."""
    pred, cache = forward(params, hidden, X, dropout, rng)
    diff = pred - Y
    loss = float(np.mean(diff ** 2))
    grads = backward(params, cache, 2.0 * diff / diff.size)
    return loss, grads


def mse(model: ForecastModel, X, Y) -> float:
    if len(X) == 0:
        return math.inf
    return float(np.mean((model.predict(X) - Y) ** 2))
