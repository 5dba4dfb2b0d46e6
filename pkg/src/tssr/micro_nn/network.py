"""A small reverse-mode network: dense and 2-D convolution layers,
pluggable catalog activations, and a softmax cross-entropy head.

Everything is float64 numpy. Parameter initialisation draws standard
normals from ``init_seed`` in layer order, then scales them by the init
scheme, so two networks that differ only in their activations start from the
same draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from tssr.catalog import ActivationSpec, Kind, eval_batch, grad_batch


class ShapeError(ValueError):
    pass


class StaleCacheError(RuntimeError):
    """A forward cache was used after the network's parameters changed."""


@dataclass(frozen=True)
class Dense:
    in_features: int
    out_features: int


@dataclass(frozen=True)
class Conv2D:
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class Activation:
    spec: ActivationSpec


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class SoftmaxCrossEntropy:
    pass


LayerSpec = Union[Dense, Conv2D, Activation, Flatten, SoftmaxCrossEntropy]

INIT_SCHEMES = ("auto", "he", "xavier")
# ReLU-like activations get He initialisation under the "auto" scheme
HE_KINDS = frozenset({Kind.RELU, Kind.PRELU, Kind.ELU, Kind.SWISH, Kind.MISH, Kind.SERF})


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple
    layers: tuple
    init_seed: int = 0
    init_scheme: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.init_scheme not in INIT_SCHEMES:
            raise ValueError(f"init_scheme must be one of {INIT_SCHEMES}")

    @property
    def activations(self) -> list[ActivationSpec]:
        return [layer.spec for layer in self.layers if isinstance(layer, Activation)]

    def resolved_init_scheme(self) -> str:
        if self.init_scheme != "auto":
            return self.init_scheme
        acts = self.activations
        return "he" if acts and acts[0].kind in HE_KINDS else "xavier"

    def with_activation(self, spec: ActivationSpec) -> "NetworkSpec":
        """Same network with every activation layer replaced by ``spec``."""
        layers = tuple(Activation(spec) if isinstance(l, Activation) else l for l in self.layers)
        return replace(self, layers=layers)

    def to_dict(self) -> dict:
        out = []
        for layer in self.layers:
            if isinstance(layer, Activation):
                out.append({"type": "Activation", **layer.spec.to_dict()})
            else:
                out.append({"type": type(layer).__name__, **layer.__dict__})
        return {
            "input_shape": list(self.input_shape),
            "layers": out,
            "init_seed": self.init_seed,
            "init_scheme": self.init_scheme,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        types = {c.__name__: c for c in (Dense, Conv2D, Flatten, SoftmaxCrossEntropy)}
        layers = []
        for item in d["layers"]:
            item = dict(item)
            kind = item.pop("type")
            if kind == "Activation":
                layers.append(Activation(ActivationSpec.from_dict(item)))
            else:
                layers.append(types[kind](**item))
        return cls(tuple(d["input_shape"]), tuple(layers), d["init_seed"], d["init_scheme"])


def mlp(sizes, activation: ActivationSpec, init_seed: int = 0, init_scheme: str = "auto") -> NetworkSpec:
    """Fully connected net, e.g. ``mlp([2, 64, 64, 2], spec)``."""
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        layers.append(Dense(a, b))
        if i < len(sizes) - 2:
            layers.append(Activation(activation))
    layers.append(SoftmaxCrossEntropy())
    return NetworkSpec((sizes[0],), tuple(layers), init_seed, init_scheme)


def conv_net(activation: ActivationSpec, image=(1, 8, 8), channels=(4, 8), classes=2,
             init_seed: int = 0, init_scheme: str = "auto") -> NetworkSpec:
    """Two 3x3 conv layers (the second strided) followed by a dense head."""
    c, h, w = image
    c1, c2 = channels
    layers = (
        Conv2D(c, c1, 3, 1, 1), Activation(activation),
        Conv2D(c1, c2, 3, 2, 1), Activation(activation),
        Flatten(), Dense(c2 * ((h + 1) // 2) * ((w + 1) // 2), classes),
        SoftmaxCrossEntropy(),
    )
    return NetworkSpec(image, layers, init_seed, init_scheme)


def _conv_out(size, k, stride, pad):
    return (size + 2 * pad - k) // stride + 1


def infer_shapes(spec: NetworkSpec) -> list[tuple]:
    """Per-layer output shapes (without the batch axis); raises ShapeError."""
    shape = spec.input_shape
    shapes = []
    for i, layer in enumerate(spec.layers):
        where = f"layer {i} ({type(layer).__name__})"
        if isinstance(layer, (Dense, Conv2D)):
            for name, v in layer.__dict__.items():
                if int(v) != v or v < (0 if name == "padding" else 1):
                    raise ShapeError(f"{where}: bad {name}={v}")
        if isinstance(layer, Dense):
            if shape != (layer.in_features,):
                raise ShapeError(f"{where}: expects ({layer.in_features},), got {shape}")
            shape = (layer.out_features,)
        elif isinstance(layer, Conv2D):
            if len(shape) != 3 or shape[0] != layer.in_channels:
                raise ShapeError(f"{where}: expects ({layer.in_channels}, H, W), got {shape}")
            oh = _conv_out(shape[1], layer.kernel_size, layer.stride, layer.padding)
            ow = _conv_out(shape[2], layer.kernel_size, layer.stride, layer.padding)
            if oh < 1 or ow < 1:
                raise ShapeError(f"{where}: kernel larger than padded input {shape}")
            shape = (layer.out_channels, oh, ow)
        elif isinstance(layer, Flatten):
            shape = (math.prod(shape),)
        elif isinstance(layer, SoftmaxCrossEntropy):
            if i != len(spec.layers) - 1:
                raise ShapeError(f"{where}: must be the last layer")
            if len(shape) != 1:
                raise ShapeError(f"{where}: expects flat logits, got {shape}")
        elif not isinstance(layer, Activation):
            raise ShapeError(f"{where}: unknown layer type")
        shapes.append(shape)
    if not spec.layers or not isinstance(spec.layers[-1], SoftmaxCrossEntropy):
        raise ShapeError("last layer must be SoftmaxCrossEntropy")
    return shapes


class Network:
    """Parameters and metadata for a built :class:`NetworkSpec`."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        self.shapes = infer_shapes(spec)
        self.init_scheme = spec.resolved_init_scheme()
        self.params: list[dict] = []
        self.version = 0
        rng = np.random.default_rng(spec.init_seed)
        for layer in spec.layers:
            if isinstance(layer, Dense):
                fan_in, fan_out = layer.in_features, layer.out_features
                shape = (fan_in, fan_out)
            elif isinstance(layer, Conv2D):
                k2 = layer.kernel_size ** 2
                fan_in, fan_out = layer.in_channels * k2, layer.out_channels * k2
                shape = (layer.out_channels, layer.in_channels, layer.kernel_size, layer.kernel_size)
            else:
                self.params.append({})
                continue
            if self.init_scheme == "he":
                scale = math.sqrt(2.0 / fan_in)
            else:
                scale = math.sqrt(2.0 / (fan_in + fan_out))
            w = rng.standard_normal(shape) * scale
            b = np.zeros(shape[1] if isinstance(layer, Dense) else shape[0])
            self.params.append({"W": w, "b": b})

    @property
    def classes(self) -> int:
        return self.shapes[-1][0]

    def parameters(self):
        for i, p in enumerate(self.params):
            for name in sorted(p):
                yield i, name, p[name]

    def mark_updated(self):
        """Invalidate outstanding forward caches after a parameter change."""
        self.version += 1


@dataclass
class Cache:
    net_id: int
    version: int
    inputs: list = field(default_factory=list)
    logits: np.ndarray | None = None


@dataclass
class Gradients:
    params: list
    # per activation layer: (min, max) of the local derivative and kink hits
    activation_stats: list = field(default_factory=list)


def _windows(x, k, stride, pad):
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    return win[:, :, ::stride, ::stride]  # (N, C, OH, OW, k, k)


def _conv_forward(layer, p, x):
    n = x.shape[0]
    win = _windows(x, layer.kernel_size, layer.stride, layer.padding)
    oh, ow = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, -1)
    out = cols @ p["W"].reshape(layer.out_channels, -1).T + p["b"]
    return out.reshape(n, oh, ow, layer.out_channels).transpose(0, 3, 1, 2), cols


def _conv_backward(layer, p, x, cols, dout):
    n, _, h, w = x.shape
    k, s, pad = layer.kernel_size, layer.stride, layer.padding
    o, oh, ow = dout.shape[1], dout.shape[2], dout.shape[3]
    d2 = dout.transpose(0, 2, 3, 1).reshape(-1, o)
    dw = (d2.T @ cols).reshape(p["W"].shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ p["W"].reshape(o, -1)).reshape(n, oh, ow, layer.in_channels, k, k)
    dxp = np.zeros((n, layer.in_channels, h + 2 * pad, w + 2 * pad))
    for a in range(k):
        for b in range(k):
            dxp[:, :, a:a + s * oh:s, b:b + s * ow:s] += dcols[:, :, :, :, a, b].transpose(0, 3, 1, 2)
    dx = dxp[:, :, pad:pad + h, pad:pad + w] if pad else dxp
    return dx, {"W": dw, "b": db}


def forward(net: Network, batch) -> tuple[np.ndarray, Cache]:
    """Logits for ``batch`` of shape ``(N, *input_shape)`` plus a backward cache."""
    x = np.asarray(batch, dtype=np.float64)
    if x.shape[1:] != net.spec.input_shape:
        raise ShapeError(f"batch shape {x.shape[1:]} does not match input {net.spec.input_shape}")
    cache = Cache(id(net), net.version)
    for layer, p in zip(net.spec.layers, net.params):
        if isinstance(layer, Dense):
            cache.inputs.append(x)
            x = x @ p["W"] + p["b"]
        elif isinstance(layer, Conv2D):
            y, cols = _conv_forward(layer, p, x)
            cache.inputs.append((x, cols))
            x = y
        elif isinstance(layer, Activation):
            cache.inputs.append(x)
            x = eval_batch(layer.spec, x)
        elif isinstance(layer, Flatten):
            cache.inputs.append(x.shape)
            x = x.reshape(x.shape[0], -1)
        else:
            cache.inputs.append(None)
    cache.logits = x
    return x, cache


def softmax_cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean loss and its gradient with respect to the logits."""
    labels = np.asarray(labels)
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    loss = float(-logp[np.arange(n), labels].sum() / n) + 0.0  # no -0.0
    dlogits = np.exp(logp)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def backprop(net: Network, cache: Cache, dlogits) -> Gradients:
    """Propagate an upstream gradient on the logits back to every parameter."""
    if cache.net_id != id(net) or cache.version != net.version:
        raise StaleCacheError("cache does not belong to the current parameters")
    grads = [dict() for _ in net.params]
    stats = []
    g = np.asarray(dlogits, dtype=np.float64)
    for i in range(len(net.spec.layers) - 1, -1, -1):
        layer, p, saved = net.spec.layers[i], net.params[i], cache.inputs[i]
        if isinstance(layer, Dense):
            grads[i] = {"W": saved.T @ g, "b": g.sum(axis=0)}
            g = g @ p["W"].T
        elif isinstance(layer, Conv2D):
            x, cols = saved
            g, grads[i] = _conv_backward(layer, p, x, cols, g)
        elif isinstance(layer, Activation):
            local, kink = grad_batch(layer.spec, saved)
            if local.size:
                stats.append((float(local.min()), float(local.max()), int(kink.sum())))
            else:
                stats.append((1.0, 1.0, 0))
            g = g * local
        elif isinstance(layer, Flatten):
            g = g.reshape(saved)
    stats.reverse()
    return Gradients(grads, stats)


def backward(net: Network, cache: Cache, labels) -> Gradients:
    """Parameter gradients of the mean softmax cross-entropy loss."""
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= net.classes:
        raise ValueError(f"labels must lie in [0, {net.classes})")
    _, dlogits = softmax_cross_entropy(cache.logits, labels)
    return backprop(net, cache, dlogits)
