"""LSTM cell and the CNN-to-LSTM sequence forecaster.

The sequence model reuses the convolutional classifier as a per-step
feature extractor: each frame of a sequence passes through the CNN up to
its final dense logits, the logits feed an LSTM (optionally bidirectional),
and a shared dense + softmax head turns every step's hidden state into a
temperature class distribution.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .cnn import CnnModel
from .layers import Dense, Softmax, glorot_uniform

DIRECTIONS = ("uni", "bi")


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LstmCell:
    """Single LSTM cell with one fused weight matrix.

    Gates live side by side in a (D + H, 4H) matrix in the order input,
    forget, output, candidate; the forget gate bias starts at 1 so early
    training does not erase cell state.
    """

    def __init__(self, input_width: int, hidden_width: int, *, rng,
                 dtype=np.float32):
        d, h = input_width, hidden_width
        self.input_width = d
        self.hidden_width = h
        self.w = glorot_uniform((d + h, 4 * h), d + h, 4 * h, rng, dtype)
        self.b = np.zeros(4 * h, dtype=dtype)
        self.b[h:2 * h] = 1.0
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}

    def zero_grads(self):
        self.dw[...] = 0.0
        self.db[...] = 0.0

    def step(self, x, h_prev, c_prev):
        """Advance one time step. Returns (h, c, cache)."""
        h = self.hidden_width
        xh = np.concatenate([x, h_prev], axis=1)
        z = xh @ self.w + self.b
        i = _sigmoid(z[:, :h])
        f = _sigmoid(z[:, h:2 * h])
        o = _sigmoid(z[:, 2 * h:3 * h])
        g = np.tanh(z[:, 3 * h:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        out = o * tc
        return out, c, (xh, i, f, o, g, c_prev, tc)

    def backward_step(self, dh, dc, cache):
        """Backprop one step. Returns (dx, dh_prev, dc_prev)."""
        xh, i, f, o, g, c_prev, tc = cache
        d = self.input_width
        do = dh * tc
        dct = dc + dh * o * (1.0 - tc * tc)
        di = dct * g
        df = dct * c_prev
        dg = dct * i
        dc_prev = dct * f
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g * g),
        ], axis=1)
        self.dw += xh.T @ dz
        self.db += dz.sum(axis=0)
        dxh = dz @ self.w.T
        return dxh[:, :d], dxh[:, d:], dc_prev


class SequenceModel:
    """CNN feature extractor + LSTM + shared per-step classification head.

    Args:
        cnn: Feature extractor; its final dense logits (width num_classes)
            are the LSTM inputs.
        lstm_hidden: LSTM hidden width H.
        direction: "uni" for a single forward pass over the steps, "bi" to
            add a reversed cell and concatenate both hidden states (2H into
            the head).
        rng: numpy Generator for weight init.
    """

    def __init__(self, cnn: CnnModel, *, lstm_hidden: int = 128,
                 direction: str = "uni", rng=None):
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, "
                             f"got {direction!r}")
        if rng is None:
            rng = np.random.default_rng()
        self.cnn = cnn
        self.lstm_hidden = lstm_hidden
        self.direction = direction
        self.num_classes = cnn.num_classes
        dtype = cnn.dtype
        d = cnn.num_classes
        self.cell_f = LstmCell(d, lstm_hidden, rng=rng, dtype=dtype)
        self.cell_b = (LstmCell(d, lstm_hidden, rng=rng, dtype=dtype)
                       if direction == "bi" else None)
        head_in = lstm_hidden * (2 if direction == "bi" else 1)
        self.head = Dense(head_in, cnn.num_classes, rng=rng, dtype=dtype)
        self._softmax = Softmax()

    def config(self) -> dict:
        out = {"kind": "sequence", "lstm_hidden": self.lstm_hidden,
               "direction": self.direction}
        out.update(self.cnn.config())
        return out

    def _run_cell(self, cell, feats, reverse: bool):
        """Run one cell over (N, n, D) features. Returns (hs, caches)."""
        n_seq, n_steps, _ = feats.shape
        h = np.zeros((n_seq, cell.hidden_width), dtype=feats.dtype)
        c = np.zeros_like(h)
        order = range(n_steps - 1, -1, -1) if reverse else range(n_steps)
        hs = np.empty((n_seq, n_steps, cell.hidden_width), dtype=feats.dtype)
        caches = {}
        for t in order:
            h, c, cache = cell.step(feats[:, t], h, c)
            hs[:, t] = h
            caches[t] = cache
        return hs, caches

    def forward(self, x, *, train: bool = False, rng=None):
        """Map (N, n, C, H, W) frame sequences to (N, n, K) distributions."""
        if x.ndim != 5:
            raise ShapeError(f"expected input (N, n, C, H, W), got {x.shape}")
        n_seq, n_steps = x.shape[:2]
        flat = x.reshape((n_seq * n_steps,) + x.shape[2:])
        feats_flat, cnn_caches = self.cnn.forward_features(flat, train=train,
                                                           rng=rng)
        feats = feats_flat.reshape(n_seq, n_steps, -1)
        hs_f, caches_f = self._run_cell(self.cell_f, feats, reverse=False)
        if self.cell_b is not None:
            hs_b, caches_b = self._run_cell(self.cell_b, feats, reverse=True)
            hs = np.concatenate([hs_f, hs_b], axis=2)
        else:
            hs_b, caches_b = None, None
            hs = hs_f
        logits, head_cache = self.head.forward(hs.reshape(n_seq * n_steps, -1))
        probs, sm_cache = self._softmax.forward(logits)
        cache = (x.shape, cnn_caches, caches_f, caches_b, head_cache, sm_cache)
        return probs.reshape(n_seq, n_steps, -1), cache

    def _backprop_cell(self, cell, dh_steps, caches, reverse: bool, dfeats):
        """Accumulate one cell's BPTT into dfeats (N, n, D)."""
        n_steps = dh_steps.shape[1]
        order = range(n_steps) if reverse else range(n_steps - 1, -1, -1)
        carry_dh = np.zeros_like(dh_steps[:, 0])
        carry_dc = np.zeros_like(carry_dh)
        for t in order:
            dx, carry_dh, carry_dc = cell.backward_step(
                dh_steps[:, t] + carry_dh, carry_dc, caches[t])
            dfeats[:, t] += dx

    def backward(self, dprobs, cache):
        """Backprop (N, n, K) output grads; returns dx over the input frames."""
        x_shape, cnn_caches, caches_f, caches_b, head_cache, sm_cache = cache
        n_seq, n_steps = x_shape[:2]
        dlogits = self._softmax.backward(
            dprobs.reshape(n_seq * n_steps, -1), sm_cache)
        dhs = self.head.backward(dlogits, head_cache).reshape(
            n_seq, n_steps, -1)
        h = self.lstm_hidden
        dfeats = np.zeros((n_seq, n_steps, self.num_classes),
                          dtype=dlogits.dtype)
        self._backprop_cell(self.cell_f, dhs[:, :, :h], caches_f,
                            reverse=False, dfeats=dfeats)
        if self.cell_b is not None:
            self._backprop_cell(self.cell_b, dhs[:, :, h:], caches_b,
                                reverse=True, dfeats=dfeats)
        dx_flat = self.cnn.backward_features(
            dfeats.reshape(n_seq * n_steps, -1), cnn_caches)
        return dx_flat.reshape(x_shape)

    def params(self) -> dict:
        out = {f"cnn.{k}": v for k, v in self.cnn.params().items()}
        out.update({f"lstm_f.{k}": v for k, v in self.cell_f.params().items()})
        if self.cell_b is not None:
            out.update({f"lstm_b.{k}": v
                        for k, v in self.cell_b.params().items()})
        out.update({f"head.{k}": v for k, v in self.head.params().items()})
        return out

    def grads(self) -> dict:
        out = {f"cnn.{k}": v for k, v in self.cnn.grads().items()}
        out.update({f"lstm_f.{k}": v for k, v in self.cell_f.grads().items()})
        if self.cell_b is not None:
            out.update({f"lstm_b.{k}": v
                        for k, v in self.cell_b.grads().items()})
        out.update({f"head.{k}": v for k, v in self.head.grads().items()})
        return out

    def zero_grads(self) -> None:
        self.cnn.zero_grads()
        self.cell_f.zero_grads()
        if self.cell_b is not None:
            self.cell_b.zero_grads()
        self.head.dw[...] = 0.0
        self.head.db[...] = 0.0

    def load_params(self, tensors: dict) -> None:
        own = self.params()
        for name, arr in tensors.items():
            if name not in own:
                raise KeyError(f"unknown parameter {name!r}")
            if own[name].shape != arr.shape:
                raise ShapeError(
                    f"parameter {name!r} has shape {own[name].shape}, "
                    f"checkpoint tensor has {arr.shape}"
                )
            own[name][...] = arr
        missing = set(own) - set(tensors)
        if missing:
            raise KeyError(f"checkpoint is missing parameters: {sorted(missing)}")

    def param_count(self) -> int:
        return sum(p.size for p in self.params().values())
