"""Activation catalog: scalar forward/backward pairs and batch kernels.

Every activation is defined once here as a scalar function built from
CPython's ``math`` module (which wraps the platform libm). The batch kernels
in :mod:`tssr._kernels` (compiled) and :mod:`tssr._fallback` (pure Python)
replicate these formulas operation for operation, so exact batch mode is
bit-identical to the scalar path.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from tssr import _backend

__all__ = [
    "Kind",
    "ActivationSpec",
    "ParameterError",
    "PointGrad",
    "sign",
    "tssr_forward",
    "tssr_backward",
    "eval",
    "eval_grad",
    "grad_point",
    "kinks",
    "as_tensor",
    "eval_batch",
    "grad_batch",
    "parse_activation",
    "all_specs",
]

TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class ParameterError(ValueError):
    """Raised when an activation's shape parameters are outside their domain."""


class Kind(enum.IntEnum):
    SIGMOID = 0
    RELU = 1
    PRELU = 2
    ELU = 3
    SWISH = 4
    TANH = 5
    SOFTSIGN = 6
    SOFTMAX_REDUCED = 7
    SRS = 8
    SERF = 9
    MISH = 10
    TSSR = 11

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_name(cls, name: str) -> "Kind":
        key = name.strip().lower().replace("-", "").replace("_", "")
        try:
            return _BY_NAME[key]
        except KeyError:
            raise ParameterError(f"unknown activation {name!r}") from None


_LABELS = {
    Kind.SIGMOID: "Sigmoid",
    Kind.RELU: "ReLU",
    Kind.PRELU: "PReLU",
    Kind.ELU: "ELU",
    Kind.SWISH: "Swish",
    Kind.TANH: "Tanh",
    Kind.SOFTSIGN: "Softsign",
    Kind.SOFTMAX_REDUCED: "SoftmaxReduced",
    Kind.SRS: "SRS",
    Kind.SERF: "Serf",
    Kind.MISH: "Mish",
    Kind.TSSR: "TSSR",
}
_BY_NAME = {label.lower(): kind for kind, label in _LABELS.items()}
_BY_NAME.update({"softmax": Kind.SOFTMAX_REDUCED, "softrootsign": Kind.SRS})

# (alpha, beta) defaults; None means the kind takes no such parameter
DEFAULT_PARAMS = {
    Kind.PRELU: (0.25, None),
    Kind.ELU: (0.5, None),
    Kind.SRS: (2.0, 3.0),
}


@dataclass(frozen=True)
class ActivationSpec:
    """An activation kind plus its shape parameters.

    ``alpha`` is the negative-side slope for PReLU, the saturation scale for
    ELU and the output scale for SRS; ``beta`` is the SRS decay scale. Kinds
    that take no parameters accept and ignore them.
    """

    kind: Kind
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        d_alpha, d_beta = DEFAULT_PARAMS.get(kind, (None, None))
        alpha = d_alpha if self.alpha is None else float(self.alpha)
        beta = d_beta if self.beta is None else float(self.beta)
        if d_alpha is None:
            alpha = None
        if d_beta is None:
            beta = None
        for name, value in (("alpha", alpha), ("beta", beta)):
            if value is not None and not math.isfinite(value):
                raise ParameterError(f"{kind.label}: {name} must be finite, got {value}")
        if kind in (Kind.ELU, Kind.SRS) and alpha <= 0:
            raise ParameterError(f"{kind.label}: alpha must be > 0, got {alpha}")
        if kind is Kind.SRS:
            if beta <= 0:
                raise ParameterError(f"SRS: beta must be > 0, got {beta}")
            # x*exp(x/beta) reaches -beta/e on the negative axis; the
            # denominator x/alpha + exp(-x/beta) has a real root unless alpha
            # exceeds that
            if alpha <= beta / math.e:
                raise ParameterError(
                    f"SRS: alpha must exceed beta/e = {beta / math.e:.6g} to avoid a pole"
                )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def name(self) -> str:
        if self.alpha is None:
            return self.kind.label
        if self.beta is None:
            return f"{self.kind.label}(alpha={self.alpha:g})"
        return f"{self.kind.label}(alpha={self.alpha:g},beta={self.beta:g})"

    @property
    def token(self) -> str:
        """Text form accepted by :func:`parse_activation`."""
        params = [f"{k}={v!r}" for k, v in (("alpha", self.alpha), ("beta", self.beta)) if v is not None]
        return self.kind.label + (":" + ",".join(params) if params else "")

    # kernels receive plain doubles; unused parameters travel as 0
    @property
    def _a(self) -> float:
        return 0.0 if self.alpha is None else self.alpha

    @property
    def _b(self) -> float:
        return 0.0 if self.beta is None else self.beta

    def to_dict(self) -> dict:
        return {"kind": self.kind.label, "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "ActivationSpec":
        return cls(Kind.from_name(d["kind"]), d.get("alpha"), d.get("beta"))


def parse_activation(text: str) -> ActivationSpec:
    """Parse ``"TSSR"``, ``"prelu:alpha=0.1"`` or ``"srs:alpha=2,beta=3"``."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        key = key.strip().lower()
        if not eq or key not in ("alpha", "beta"):
            raise ParameterError(f"bad activation parameter {item!r} in {text!r}")
        try:
            params[key] = float(value)
        except ValueError:
            raise ParameterError(f"bad number {value!r} in {text!r}") from None
    return ActivationSpec(Kind.from_name(name), **params)


def all_specs() -> list[ActivationSpec]:
    """The twelve catalog activations with default parameters, in table order."""
    return [ActivationSpec(kind) for kind in Kind]


def _coerce(spec) -> ActivationSpec:
    if isinstance(spec, ActivationSpec):
        return spec
    if isinstance(spec, Kind):
        return ActivationSpec(spec)
    if isinstance(spec, str):
        return parse_activation(spec)
    raise TypeError(f"expected ActivationSpec, Kind or str, got {type(spec).__name__}")


# ---------------------------------------------------------------------------
# scalar reference implementations


def sign(x: float) -> float:
    """Sign of ``x`` with ``sign(0) = 0``."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def tssr_forward(x: float) -> float:
    """Identity on [-1, 1], ``sign(x) * (2*sqrt(|x|) - 1)`` outside."""
    a = abs(x)
    if a <= 1.0:
        return x
    return sign(x) * (2.0 * math.sqrt(a) - 1.0)


def tssr_backward(x: float) -> float:
    """Derivative of :func:`tssr_forward`; always in (0, 1]."""
    a = abs(x)
    if a <= 1.0:
        return 1.0
    return 1.0 / math.sqrt(a)


def _sigmoid(x: float) -> float:
    z = math.exp(-abs(x))
    if x >= 0.0:
        return 1.0 / (1.0 + z)
    return z / (1.0 + z)


def _sigmoid_grad(x: float) -> float:
    z = math.exp(-abs(x))
    return z / ((1.0 + z) * (1.0 + z))


def _softplus(x: float) -> float:
    return (x if x > 0.0 else 0.0) + math.log1p(math.exp(-abs(x)))


def _srs(x: float, alpha: float, beta: float) -> float:
    if x >= 0.0:
        e = math.exp(-x / beta)
        return x / (x / alpha + e)
    # same expression with numerator and denominator scaled by exp(x/beta)
    r = math.exp(x / beta)
    return x * r / (x * r / alpha + 1.0)


def _srs_grad(x: float, alpha: float, beta: float) -> float:
    if x >= 0.0:
        e = math.exp(-x / beta)
        if e == 0.0:
            return 0.0
        d = x / alpha + e
        return e * (1.0 + x / beta) / (d * d)
    r = math.exp(x / beta)
    if r == 0.0:
        return 0.0
    d = x * r / alpha + 1.0
    return r * (1.0 + x / beta) / (d * d)


def _forward(kind: Kind, a: float, b: float, x: float) -> float:
    if kind is Kind.TSSR:
        return tssr_forward(x)
    if kind is Kind.SIGMOID or kind is Kind.SOFTMAX_REDUCED:
        return _sigmoid(x)
    if kind is Kind.RELU:
        return x if x > 0.0 else 0.0
    if kind is Kind.PRELU:
        return x if x > 0.0 else a * x
    if kind is Kind.ELU:
        return x if x > 0.0 else a * math.expm1(x)
    if kind is Kind.SWISH:
        return x * _sigmoid(x)
    if kind is Kind.TANH:
        return math.tanh(x)
    if kind is Kind.SOFTSIGN:
        return x / (abs(x) + 1.0)
    if kind is Kind.SRS:
        return _srs(x, a, b)
    if kind is Kind.SERF:
        return x * math.erf(_softplus(x))
    if kind is Kind.MISH:
        return x * math.tanh(_softplus(x))
    raise AssertionError(kind)


def _grad(kind: Kind, a: float, b: float, x: float) -> float:
    # at a kink (x == 0 for ReLU/PReLU/ELU) this is the right-hand derivative
    if kind is Kind.TSSR:
        return tssr_backward(x)
    if kind is Kind.SIGMOID or kind is Kind.SOFTMAX_REDUCED:
        return _sigmoid_grad(x)
    if kind is Kind.RELU:
        return 1.0 if x >= 0.0 else 0.0
    if kind is Kind.PRELU:
        return 1.0 if x >= 0.0 else a
    if kind is Kind.ELU:
        return 1.0 if x >= 0.0 else a * math.exp(x)
    if kind is Kind.SWISH:
        return _sigmoid(x) * (1.0 + x * _sigmoid(-x))
    if kind is Kind.TANH:
        # sech^2 via exp(-2|x|); 1 - tanh^2 underflows to 0 in the tails
        z = math.exp(-2.0 * abs(x))
        return 4.0 * z / ((1.0 + z) * (1.0 + z))
    if kind is Kind.SOFTSIGN:
        d = abs(x) + 1.0
        return 1.0 / (d * d)
    if kind is Kind.SRS:
        return _srs_grad(x, a, b)
    if kind is Kind.SERF:
        sp = _softplus(x)
        return math.erf(sp) + x * (TWO_OVER_SQRT_PI * math.exp(-sp * sp) * _sigmoid(x))
    if kind is Kind.MISH:
        t = math.tanh(_softplus(x))
        return t + x * ((1.0 - t * t) * _sigmoid(x))
    raise AssertionError(kind)


def eval(spec, x: float) -> float:  # noqa: A001
    """Value of the activation ``spec`` at ``x``."""
    spec = _coerce(spec)
    return _forward(spec.kind, spec._a, spec._b, float(x))


def kinks(spec) -> tuple[float, ...]:
    """Points where the activation is continuous but not differentiable."""
    spec = _coerce(spec)
    if spec.kind is Kind.RELU:
        return (0.0,)
    if spec.kind in (Kind.PRELU, Kind.ELU) and spec.alpha != 1.0:
        return (0.0,)
    return ()


class PointGrad(NamedTuple):
    value: float
    kink: bool


def grad_point(spec, x: float) -> PointGrad:
    """Derivative at ``x`` together with a flag set when ``x`` is a kink.

    At a kink the right-hand derivative is returned.
    """
    spec = _coerce(spec)
    x = float(x)
    return PointGrad(_grad(spec.kind, spec._a, spec._b, x), x in kinks(spec))


def eval_grad(spec, x: float) -> float:
    """Analytic derivative of ``spec`` at ``x`` (right-hand at kinks)."""
    spec = _coerce(spec)
    return _grad(spec.kind, spec._a, spec._b, float(x))


# ---------------------------------------------------------------------------
# batch kernels


def as_tensor(xs) -> np.ndarray:
    """Coerce to a C-contiguous float64 array (the package's tensor type)."""
    return np.ascontiguousarray(xs, dtype=np.float64)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def eval_batch(spec, xs, approximate: bool = False, backend=None) -> np.ndarray:
    """Elementwise :func:`eval` over a tensor; output has the input's shape.

    With ``approximate=True`` TSSR's outer branch uses a fast reciprocal
    square root (max relative error about 1.1e-5); other kinds ignore the flag.
    """
    spec = _coerce(spec)
    xs = as_tensor(xs)
    impl = _backend.get(backend)
    flat = xs.reshape(-1)
    if approximate and spec.kind is Kind.TSSR:
        out = impl.tssr_forward_approx(flat)
    else:
        out = impl.forward(int(spec.kind), spec._a, spec._b, flat)
    return _frozen(out.reshape(xs.shape))


def grad_batch(spec, xs, backend=None) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise :func:`eval_grad`; returns ``(grads, kink_mask)``."""
    spec = _coerce(spec)
    xs = as_tensor(xs)
    impl = _backend.get(backend)
    out = impl.grad(int(spec.kind), spec._a, spec._b, xs.reshape(-1)).reshape(xs.shape)
    mask = np.zeros(xs.shape, dtype=bool)
    for k in kinks(spec):
        mask |= xs == k
    return _frozen(out), _frozen(mask)
