"""Layer-spec driven network container and checkpoint serialization."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..storage import FormatError, read_tensor, write_tensor
from .layers import Conv3D, Dense, Flatten, ReLU, SoftmaxCrossEntropy

MAGIC_NET = b"BGNN"
CHECKPOINT_VERSION = 1

_KIND_CODES = {"conv3d": 0, "fc": 1, "relu": 2, "flatten": 3, "softmax_ce": 4}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}
_DTYPES = {0: "<f4", 1: "<f8"}


@dataclass(frozen=True)
class LayerSpec:
    """One layer: conv3d, fc, relu, flatten, or the softmax_ce loss head."""

    kind: str
    in_channels: int = 0
    out_channels: int = 0
    kernel: tuple[int, int, int] = ()
    in_width: int = 0
    out_width: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv3d":
            if self.in_channels < 1 or self.out_channels < 1:
                raise ValueError("conv3d channel counts must be >= 1")
            if len(self.kernel) != 3 or any(k < 1 or k % 2 == 0 for k in self.kernel):
                raise ValueError("conv3d kernel must be three odd sizes")
        if self.kind == "fc" and (self.in_width < 1 or self.out_width < 1):
            raise ValueError("fc widths must be >= 1")

    @classmethod
    def conv3d(cls, in_channels, out_channels, kernel):
        return cls(kind="conv3d", in_channels=in_channels, out_channels=out_channels,
                   kernel=tuple(kernel))

    @classmethod
    def fc(cls, in_width, out_width):
        return cls(kind="fc", in_width=in_width, out_width=out_width)

    @classmethod
    def relu(cls):
        return cls(kind="relu")

    @classmethod
    def flatten(cls):
        return cls(kind="flatten")

    @classmethod
    def softmax_ce(cls):
        return cls(kind="softmax_ce")

    @property
    def parameterized(self) -> bool:
        return self.kind in ("conv3d", "fc")


class Network:
    """Ordered layers built from specs; float64 parameters throughout.

    The optional trailing softmax_ce spec marks the loss head used during
    training; forward() always returns raw logits.
    """

    def __init__(self, specs: list[LayerSpec], seed: int = 0):
        specs = list(specs)
        for spec in specs[:-1]:
            if spec.kind == "softmax_ce":
                raise ValueError("softmax_ce may only appear as the final spec")
        self.specs = specs
        self.loss_head = SoftmaxCrossEntropy() if specs and specs[-1].kind == "softmax_ce" else None
        self.seed = int(seed)

        rng = np.random.default_rng(self.seed)
        self.layers = []
        for spec in specs:
            if spec.kind == "conv3d":
                self.layers.append(Conv3D(spec.in_channels, spec.out_channels,
                                          spec.kernel, rng))
            elif spec.kind == "fc":
                self.layers.append(Dense(spec.in_width, spec.out_width, rng))
            elif spec.kind == "relu":
                self.layers.append(ReLU())
            elif spec.kind == "flatten":
                self.layers.append(Flatten())

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out)
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def loss(self, logits: np.ndarray, labels: np.ndarray) -> float:
        if self.loss_head is None:
            raise ValueError("network has no softmax_ce head")
        return self.loss_head.forward(logits, labels)

    def loss_backward(self) -> np.ndarray:
        return self.loss_head.backward()

    def parameterized_layers(self):
        return [(i, layer) for i, layer in enumerate(self.layers) if layer.params]

    def named_parameters(self):
        """(key, parameter array, gradient array) triples in a stable order."""
        out = []
        for i, layer in self.parameterized_layers():
            for name in sorted(layer.params):
                out.append(((i, name), layer.params[name], layer.grads[name]))
        return out

    def parameter_count(self) -> int:
        return sum(p.size for _, p, _ in self.named_parameters())

    @property
    def parameterized_layer_count(self) -> int:
        return sum(1 for spec in self.specs if spec.parameterized)

    def save(self, path, dtype: str = "<f8") -> None:
        """Checkpoint: magic, u16 version, u8 payload dtype, spec table, then
        per parameterized layer its W and b tensors."""
        dtype_code = {"<f4": 0, "<f8": 1}[dtype]
        with open(path, "wb") as fp:
            fp.write(MAGIC_NET)
            fp.write(struct.pack("<HBH", CHECKPOINT_VERSION, dtype_code, len(self.specs)))
            for spec in self.specs:
                fp.write(struct.pack("<B", _KIND_CODES[spec.kind]))
                if spec.kind == "conv3d":
                    fp.write(struct.pack("<5I", spec.in_channels, spec.out_channels,
                                         *spec.kernel))
                elif spec.kind == "fc":
                    fp.write(struct.pack("<2I", spec.in_width, spec.out_width))
            for _, layer in self.parameterized_layers():
                write_tensor(fp, layer.params["W"], dtype=dtype)
                write_tensor(fp, layer.params["b"], dtype=dtype)

    @classmethod
    def load(cls, path) -> "Network":
        with open(path, "rb") as fp:
            magic = fp.read(4)
            if magic != MAGIC_NET:
                raise FormatError(f"bad checkpoint magic {magic!r}")
            version, dtype_code, n_specs = struct.unpack("<HBH", fp.read(5))
            if version != CHECKPOINT_VERSION:
                raise FormatError(f"unsupported checkpoint version {version}")
            if dtype_code not in _DTYPES:
                raise FormatError(f"unknown payload dtype code {dtype_code}")
            dtype = _DTYPES[dtype_code]
            specs = []
            for _ in range(n_specs):
                code = struct.unpack("<B", fp.read(1))[0]
                if code not in _CODE_KINDS:
                    raise FormatError(f"unknown layer kind code {code}")
                kind = _CODE_KINDS[code]
                if kind == "conv3d":
                    in_c, out_c, kx, ky, kz = struct.unpack("<5I", fp.read(20))
                    specs.append(LayerSpec.conv3d(in_c, out_c, (kx, ky, kz)))
                elif kind == "fc":
                    in_w, out_w = struct.unpack("<2I", fp.read(8))
                    specs.append(LayerSpec.fc(in_w, out_w))
                else:
                    specs.append(LayerSpec(kind=kind))
            net = cls(specs, seed=0)
            for _, layer in net.parameterized_layers():
                w = read_tensor(fp, dtype=dtype).astype(np.float64)
                b = read_tensor(fp, dtype=dtype).astype(np.float64)
                if w.shape != layer.params["W"].shape or b.shape != layer.params["b"].shape:
                    raise FormatError("checkpoint parameter shapes do not match specs")
                layer.params["W"] = w
                layer.params["b"] = b
            if fp.read(1):
                raise FormatError("trailing bytes after the last parameter tensor")
        return net


def predict_logits(net: Network, features: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Forward in evaluation batches; returns (N, classes) logits."""
    outs = [net.forward(features[s:s + batch_size])
            for s in range(0, len(features), batch_size)]
    return np.concatenate(outs, axis=0)
