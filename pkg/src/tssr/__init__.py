"""TSSR activation, a catalog of comparison activations, and tooling around them."""
from tssr._backend import NAME as KERNEL_BACKEND
from tssr.catalog import (
    ActivationSpec,
    Kind,
    ParameterError,
    eval_batch,
    eval_grad,
    grad_batch,
    tssr_backward,
    tssr_forward,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "ActivationSpec",
    "Kind",
    "ParameterError",
    "eval_batch",
    "eval_grad",
    "grad_batch",
    "tssr_backward",
    "tssr_forward",
]
