"""Seeded SGD-with-momentum training loop."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from tssr.micro_nn.datasets import Dataset
from tssr.micro_nn.network import (
    Network,
    NetworkSpec,
    backprop,
    forward,
    softmax_cross_entropy,
)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 100

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")


@dataclass(frozen=True)
class EpochStats:
    train_loss: float
    train_acc: float
    test_acc: float


@dataclass
class TrainRun:
    spec: NetworkSpec
    optimizer: OptimizerConfig
    data_seed: int
    dataset: str
    init_scheme: str
    initial_loss: float
    per_epoch: list = field(default_factory=list)
    status: str = "ok"
    diverged_epoch: int | None = None
    # per activation layer, over every backward pass of the run
    activation_grad_range: list = field(default_factory=list)
    kink_hits: int = 0

    @property
    def final(self) -> EpochStats | None:
        return self.per_epoch[-1] if self.per_epoch else None

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "optimizer": asdict(self.optimizer),
            "data_seed": self.data_seed,
            "dataset": self.dataset,
            "init_scheme": self.init_scheme,
            "initial_loss": _num(self.initial_loss),
            "per_epoch": [
                {"train_loss": _num(e.train_loss), "train_acc": e.train_acc, "test_acc": e.test_acc}
                for e in self.per_epoch
            ],
            "status": self.status,
            "diverged_epoch": self.diverged_epoch,
            "activation_grad_range": [list(r) for r in self.activation_grad_range],
            "kink_hits": self.kink_hits,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainRun":
        return cls(
            spec=NetworkSpec.from_dict(d["spec"]),
            optimizer=OptimizerConfig(**d["optimizer"]),
            data_seed=d["data_seed"],
            dataset=d["dataset"],
            init_scheme=d["init_scheme"],
            initial_loss=_unnum(d["initial_loss"]),
            per_epoch=[EpochStats(_unnum(e["train_loss"]), e["train_acc"], e["test_acc"])
                       for e in d["per_epoch"]],
            status=d["status"],
            diverged_epoch=d["diverged_epoch"],
            activation_grad_range=[tuple(r) for r in d["activation_grad_range"]],
            kink_hits=d["kink_hits"],
        )


def _num(v):
    # JSON has no NaN/Inf; a diverged loss is stored as null
    return v if math.isfinite(v) else None


def _unnum(v):
    return math.nan if v is None else v


def evaluate(net: Network, x, y) -> tuple[float, float]:
    """Mean loss and accuracy over a whole split."""
    logits, _ = forward(net, x)
    loss, _ = softmax_cross_entropy(logits, y)
    acc = float(np.mean(np.argmax(logits, axis=1) == y)) if len(y) else 0.0
    return loss, acc


def train(spec: NetworkSpec, dataset: Dataset, optimizer: OptimizerConfig, data_seed: int = 0) -> TrainRun:
    """Train ``spec`` on ``dataset``; a pure function of its arguments.

    ``spec.init_seed`` fixes the initial weights and ``data_seed`` the
    mini-batch order. A non-finite loss stops the run with
    ``status="diverged"`` and the 0-based epoch index where it happened.
    """
    net = Network(spec)
    x, y = dataset.x_train, dataset.y_train
    initial_loss, _ = evaluate(net, x, y)
    run = TrainRun(spec, optimizer, data_seed, dataset.name, net.init_scheme, initial_loss)

    with np.errstate(over="ignore", invalid="ignore"):
        return _run_epochs(net, run, dataset, optimizer, data_seed)


def _run_epochs(net, run, dataset, optimizer, data_seed):
    # overflow is expected on the way to divergence, which is reported below
    x, y = dataset.x_train, dataset.y_train
    velocity = [{k: np.zeros_like(v) for k, v in p.items()} for p in net.params]
    lo = hi = None
    rng = np.random.default_rng(data_seed)
    lr, mu, bs = optimizer.learning_rate, optimizer.momentum, optimizer.batch_size

    for epoch in range(optimizer.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), bs):
            idx = order[start:start + bs]
            logits, cache = forward(net, x[idx])
            loss, dlogits = softmax_cross_entropy(logits, y[idx])
            if not math.isfinite(loss):
                return _diverged(run, epoch, lo, hi)
            grads = backprop(net, cache, dlogits)
            mins = [s[0] for s in grads.activation_stats]
            maxs = [s[1] for s in grads.activation_stats]
            lo = mins if lo is None else [min(a, b) for a, b in zip(lo, mins)]
            hi = maxs if hi is None else [max(a, b) for a, b in zip(hi, maxs)]
            run.kink_hits += sum(s[2] for s in grads.activation_stats)
            for p, v, g in zip(net.params, velocity, grads.params):
                for k in p:
                    v[k] *= mu
                    v[k] -= lr * g[k]
                    p[k] += v[k]
            net.mark_updated()
        train_loss, train_acc = evaluate(net, x, y)
        if not math.isfinite(train_loss):
            return _diverged(run, epoch, lo, hi)
        _, test_acc = evaluate(net, dataset.x_test, dataset.y_test)
        run.per_epoch.append(EpochStats(train_loss, train_acc, test_acc))

    run.activation_grad_range = list(zip(lo, hi)) if lo is not None else []
    return run


def _diverged(run, epoch, lo, hi):
    run.status = "diverged"
    run.diverged_epoch = epoch
    run.activation_grad_range = list(zip(lo, hi)) if lo is not None else []
    return run
