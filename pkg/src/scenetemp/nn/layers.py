"""Network layers with hand-written forward and backward passes.

Every layer's ``forward`` returns ``(output, cache)`` and ``backward`` takes
``(dout, cache)`` and returns the gradient w.r.t. the input, accumulating
parameter gradients into the layer's own buffers.  Explicit caches keep
layers reusable across several forwards before a backward (the sequence
model runs its feature extractor once per time step) and keep shared
read-only models safe to use from multiple threads.

All array arguments are batch-first: images are (N, C, H, W), dense inputs
are (N, K).
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


def glorot_uniform(shape, fan_in: int, fan_out: int, rng, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    """Base layer: parameterless unless a subclass overrides params()."""

    def params(self) -> dict:
        return {}

    def grads(self) -> dict:
        return {}

    def zero_grads(self) -> None:
        for g in self.grads().values():
            g[...] = 0.0

    def forward(self, x, *, train: bool = False, rng=None):
        raise NotImplementedError

    def backward(self, dout, cache):
        raise NotImplementedError


class Conv2D(Layer):
    """2-D cross-correlation, stride 1, zero 'same' padding, odd square kernel."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3,
                 *, rng, dtype=np.float32):
        if kernel_size < 1 or kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and >= 1, got {kernel_size}")
        k = kernel_size
        self.w = glorot_uniform((out_channels, in_channels, k, k),
                                in_channels * k * k, out_channels * k * k, rng, dtype)
        self.b = np.zeros(out_channels, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}

    def forward(self, x, *, train: bool = False, rng=None):
        if x.ndim != 4 or x.shape[1] != self.w.shape[1]:
            raise ShapeError(
                f"conv2d expects input (N, {self.w.shape[1]}, H, W), got {x.shape}"
            )
        n, _, h, w = x.shape
        k = self.w.shape[2]
        p = k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        out = np.empty((n, h, w, self.w.shape[0]), dtype=x.dtype)
        out[...] = self.b
        for ky in range(k):
            for kx in range(k):
                patch = xp[:, :, ky:ky + h, kx:kx + w]
                out += np.tensordot(patch, self.w[:, :, ky, kx], axes=([1], [1]))
        return np.ascontiguousarray(out.transpose(0, 3, 1, 2)), (x.shape, xp)

    def backward(self, dout, cache):
        x_shape, xp = cache
        n, _, h, w = x_shape
        f, _, k, _ = self.w.shape
        if dout.shape != (n, f, h, w):
            raise ShapeError(
                f"conv2d backward expects dout {(n, f, h, w)}, got {dout.shape}"
            )
        p = k // 2
        self.db += dout.sum(axis=(0, 2, 3))
        dxp = np.zeros_like(xp)
        for ky in range(k):
            for kx in range(k):
                patch = xp[:, :, ky:ky + h, kx:kx + w]
                self.dw[:, :, ky, kx] += np.tensordot(
                    dout, patch, axes=([0, 2, 3], [0, 2, 3])
                )
                dxp[:, :, ky:ky + h, kx:kx + w] += np.tensordot(
                    dout, self.w[:, :, ky, kx], axes=([1], [0])
                ).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(dxp[:, :, p:p + h, p:p + w])


class MaxPool2D(Layer):
    """Non-overlapping window maximum; first occurrence wins ties."""

    def __init__(self, size: int = 2):
        if size < 2:
            raise ValueError(f"pool size must be >= 2, got {size}")
        self.size = size

    def forward(self, x, *, train: bool = False, rng=None):
        if x.ndim != 4:
            raise ShapeError(f"maxpool2d expects (N, C, H, W), got {x.shape}")
        n, c, h, w = x.shape
        s = self.size
        if h % s or w % s:
            raise ShapeError(
                f"maxpool2d needs spatial dims divisible by {s}, got {x.shape}"
            )
        win = (x.reshape(n, c, h // s, s, w // s, s)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(n, c, h // s, w // s, s * s))
        idx = win.argmax(axis=-1)
        out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
        return out, (x.shape, idx, win)

    def backward(self, dout, cache):
        x_shape, idx, _ = cache
        n, c, h, w = x_shape
        s = self.size
        dwin = np.zeros((n, c, h // s, w // s, s * s), dtype=dout.dtype)
        np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
        dx = (dwin.reshape(n, c, h // s, w // s, s, s)
                  .transpose(0, 1, 2, 4, 3, 5)
                  .reshape(n, c, h, w))
        return np.ascontiguousarray(dx)


class Dense(Layer):
    """Affine map x @ W + b."""

    def __init__(self, in_width: int, out_width: int, *, rng, dtype=np.float32):
        self.w = glorot_uniform((in_width, out_width), in_width, out_width, rng, dtype)
        self.b = np.zeros(out_width, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}

    def forward(self, x, *, train: bool = False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.w.shape[0]:
            raise ShapeError(
                f"dense expects input (N, {self.w.shape[0]}), got {x.shape}"
            )
        return x @ self.w + self.b, x

    def backward(self, dout, cache):
        x = cache
        if dout.shape != (x.shape[0], self.w.shape[1]):
            raise ShapeError(
                f"dense backward expects dout {(x.shape[0], self.w.shape[1])}, "
                f"got {dout.shape}"
            )
        self.dw += x.T @ dout
        self.db += dout.sum(axis=0)
        return dout @ self.w.T


class ReLU(Layer):
    def forward(self, x, *, train: bool = False, rng=None):
        mask = x > 0
        return x * mask, (mask, x)

    def backward(self, dout, cache):
        mask, _ = cache
        return dout * mask


class Softmax(Layer):
    """Shift-stabilized softmax over the last axis."""

    def forward(self, x, *, train: bool = False, rng=None):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=-1, keepdims=True)
        return y, y

    def backward(self, dout, cache):
        y = cache
        return y * (dout - (dout * y).sum(axis=-1, keepdims=True))


class Dropout(Layer):
    """Inverted dropout: train mode scales survivors by 1/(1-rate); eval is identity."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, *, train: bool = False, rng=None):
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ValueError("train-mode dropout requires an rng")
        keep = 1.0 - self.rate
        mask = (rng.random(x.shape) < keep).astype(x.dtype)
        mask /= keep
        return x * mask, mask

    def backward(self, dout, cache):
        if cache is None:
            return dout
        return dout * cache


class Flatten(Layer):
    def forward(self, x, *, train: bool = False, rng=None):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return dout.reshape(cache)
