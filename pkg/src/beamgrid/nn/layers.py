"""Batched float64 layers with explicit forward/backward passes.

Inputs carry a leading batch axis: (N, C, Dx, Dy, Dz) for 3D convolution,
(N, width) for fully connected layers.  Convolutions use "same" zero padding
at stride 1, so spatial dimensions are preserved.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeMismatch(Exception):
    """Layer input shape incompatible with its parameters."""


def fan_in_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base: parameter-free, identity-shaped."""

    params: dict
    grads: dict

    def __init__(self):
        self.params = {}
        self.grads = {}

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return np.where(self._mask, grad, 0.0)


class Flatten(Layer):
    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class Dense(Layer):
    """y = x @ W + b with W of shape (in_width, out_width)."""

    def __init__(self, in_width: int, out_width: int, rng: np.random.Generator):
        super().__init__()
        self.in_width = in_width
        self.out_width = out_width
        self.params = {
            "W": fan_in_uniform(rng, (in_width, out_width), in_width),
            "b": np.zeros(out_width),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_width:
            raise ShapeMismatch(f"expected (N, {self.in_width}), got {x.shape}")
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad):
        self.grads["W"] = self._x.T @ grad
        self.grads["b"] = grad.sum(axis=0)
        return grad @ self.params["W"].T


class Conv3D(Layer):
    """Stride-1 3D convolution with "same" zero padding (odd kernels only)."""

    def __init__(self, in_channels: int, out_channels: int, kernel: tuple[int, int, int],
                 rng: np.random.Generator):
        super().__init__()
        if any(k % 2 == 0 for k in kernel):
            raise ValueError("same padding requires odd kernel dimensions")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = tuple(kernel)
        fan_in = in_channels * int(np.prod(kernel))
        self.params = {
            "W": fan_in_uniform(rng, (out_channels, in_channels) + self.kernel, fan_in),
            "b": np.zeros(out_channels),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x):
        if x.ndim != 5 or x.shape[1] != self.in_channels:
            raise ShapeMismatch(
                f"expected (N, {self.in_channels}, Dx, Dy, Dz), got {x.shape}")
        kx, ky, kz = self.kernel
        pads = ((0, 0), (0, 0), (kx // 2, kx // 2), (ky // 2, ky // 2), (kz // 2, kz // 2))
        xp = np.pad(x, pads)
        # windows: (N, C, Dx, Dy, Dz, kx, ky, kz)
        self._windows = sliding_window_view(xp, self.kernel, axis=(2, 3, 4))
        out = np.einsum("ncxyzijk,ocijk->noxyz", self._windows, self.params["W"],
                        optimize=True)
        return out + self.params["b"][None, :, None, None, None]

    def backward(self, grad):
        kx, ky, kz = self.kernel
        self.grads["W"] = np.einsum("ncxyzijk,noxyz->ocijk", self._windows, grad,
                                    optimize=True)
        self.grads["b"] = grad.sum(axis=(0, 2, 3, 4))
        # Input gradient: full correlation of the output gradient with the
        # spatially flipped kernel, then crop the "same" padding.
        gp = np.pad(grad, ((0, 0), (0, 0), (kx - 1, kx - 1), (ky - 1, ky - 1),
                           (kz - 1, kz - 1)))
        gwin = sliding_window_view(gp, self.kernel, axis=(2, 3, 4))
        w_flip = self.params["W"][:, :, ::-1, ::-1, ::-1]
        dxp = np.einsum("noxyzijk,ocijk->ncxyz", gwin, w_flip, optimize=True)
        px, py, pz = kx // 2, ky // 2, kz // 2
        dx_shape = dxp.shape
        return dxp[:, :, px:dx_shape[2] - px, py:dx_shape[3] - py, pz:dx_shape[4] - pz]


class SoftmaxCrossEntropy:
    """Loss head: mean cross entropy between softmax(logits) and integer labels."""

    def forward(self, logits: np.ndarray, labels: np.ndarray) -> float:
        z = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
        self._log_probs = z - log_norm
        self._labels = labels
        n = logits.shape[0]
        return float(-self._log_probs[np.arange(n), labels].mean())

    def probs(self) -> np.ndarray:
        return np.exp(self._log_probs)

    def backward(self) -> np.ndarray:
        n = self._log_probs.shape[0]
        grad = np.exp(self._log_probs)
        grad[np.arange(n), self._labels] -= 1.0
        return grad / n
