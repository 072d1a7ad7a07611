"""Convolutional classifier over temperature classes.

The stack, front to back: two 3x3/32 convolutions, 2x2 max pool, dropout
0.25, two 3x3/64 convolutions, 2x2 max pool, dropout 0.25, a 512-wide
fully connected layer, dropout 0.5, a num_classes-wide fully connected
layer, softmax.  Every convolution and the first dense layer are followed
by ReLU.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .layers import Conv2D, Dense, Dropout, Flatten, MaxPool2D, ReLU, Softmax


class CnnModel:
    """Single-image model mapping (N, C, H, W) pixels to class probabilities.

    The layers before the final softmax double as the feature extractor for
    the sequence model: ``forward_features`` stops at the last dense layer's
    logits, and ``backward_features`` pushes gradients back from there.

    Args:
        input_size: Side length of the square input; must be divisible by 4
            (two 2x2 pools).
        in_channels: Input channel count (3 for RGB).
        num_classes: Width of the output distribution.
        dense_width: Width of the hidden fully connected layer.
        rng: numpy Generator for weight init.
        dtype: Parameter dtype; float32 by default.
    """

    def __init__(self, *, input_size: int = 64, in_channels: int = 3,
                 num_classes: int = 70, dense_width: int = 512,
                 rng=None, dtype=np.float32):
        if input_size < 4 or input_size % 4 != 0:
            raise ValueError(
                f"input_size must be a positive multiple of 4, got {input_size}"
            )
        if rng is None:
            rng = np.random.default_rng()
        self.input_size = input_size
        self.in_channels = in_channels
        self.num_classes = num_classes
        self.dense_width = dense_width
        self.dtype = np.dtype(dtype)

        side = input_size // 4
        self.flat_width = 64 * side * side
        self._named = [
            ("conv1", Conv2D(in_channels, 32, rng=rng, dtype=dtype)),
            ("relu1", ReLU()),
            ("conv2", Conv2D(32, 32, rng=rng, dtype=dtype)),
            ("relu2", ReLU()),
            ("pool1", MaxPool2D(2)),
            ("drop1", Dropout(0.25)),
            ("conv3", Conv2D(32, 64, rng=rng, dtype=dtype)),
            ("relu3", ReLU()),
            ("conv4", Conv2D(64, 64, rng=rng, dtype=dtype)),
            ("relu4", ReLU()),
            ("pool2", MaxPool2D(2)),
            ("drop2", Dropout(0.25)),
            ("flatten", Flatten()),
            ("fc1", Dense(self.flat_width, dense_width, rng=rng, dtype=dtype)),
            ("relu5", ReLU()),
            ("drop3", Dropout(0.5)),
            ("fc2", Dense(dense_width, num_classes, rng=rng, dtype=dtype)),
        ]
        self._softmax = Softmax()

    def config(self) -> dict:
        return {"input_size": self.input_size, "in_channels": self.in_channels,
                "num_classes": self.num_classes, "dense_width": self.dense_width}

    def _check_input(self, x) -> None:
        want = (self.in_channels, self.input_size, self.input_size)
        if x.ndim != 4 or x.shape[1:] != want:
            raise ShapeError(f"expected input (N, {want[0]}, {want[1]}, {want[2]}), "
                             f"got {x.shape}")

    def forward_features(self, x, *, train: bool = False, rng=None):
        """Run up to the final dense logits. Returns (logits, caches)."""
        self._check_input(x)
        caches = []
        out = x
        for _, layer in self._named:
            out, cache = layer.forward(out, train=train, rng=rng)
            caches.append(cache)
        return out, caches

    def backward_features(self, dlogits, caches):
        dout = dlogits
        for (_, layer), cache in zip(reversed(self._named), reversed(caches)):
            dout = layer.backward(dout, cache)
        return dout

    def forward(self, x, *, train: bool = False, rng=None):
        """Full pass to class probabilities. Returns (probs, caches)."""
        logits, caches = self.forward_features(x, train=train, rng=rng)
        probs, sm_cache = self._softmax.forward(logits)
        caches.append(sm_cache)
        return probs, caches

    def backward(self, dprobs, caches):
        dlogits = self._softmax.backward(dprobs, caches[-1])
        return self.backward_features(dlogits, caches[:-1])

    def params(self) -> dict:
        out = {}
        for name, layer in self._named:
            for key, val in layer.params().items():
                out[f"{name}.{key}"] = val
        return out

    def grads(self) -> dict:
        out = {}
        for name, layer in self._named:
            for key, val in layer.grads().items():
                out[f"{name}.{key}"] = val
        return out

    def zero_grads(self) -> None:
        for _, layer in self._named:
            layer.zero_grads()

    def load_params(self, tensors: dict) -> None:
        """Copy named tensors into the model's parameters in place."""
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
