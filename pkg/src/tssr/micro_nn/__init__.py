"""Minimal deterministic neural-network core for desk-scale comparisons."""
from tssr.micro_nn.datasets import Dataset, DatasetError, make_dataset
from tssr.micro_nn.network import (
    Activation,
    Conv2D,
    Dense,
    Flatten,
    Network,
    NetworkSpec,
    ShapeError,
    SoftmaxCrossEntropy,
    StaleCacheError,
    backprop,
    backward,
    conv_net,
    forward,
    mlp,
    softmax_cross_entropy,
)
from tssr.micro_nn.training import EpochStats, OptimizerConfig, TrainRun, evaluate, train

__all__ = [
    "Activation", "Conv2D", "Dataset", "DatasetError", "Dense", "EpochStats",
    "Flatten", "Network", "NetworkSpec", "OptimizerConfig", "ShapeError",
    "SoftmaxCrossEntropy", "StaleCacheError", "TrainRun", "backprop", "backward",
    "conv_net", "evaluate", "forward", "make_dataset", "mlp",
    "softmax_cross_entropy", "train",
]
