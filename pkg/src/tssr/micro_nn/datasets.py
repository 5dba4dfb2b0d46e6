"""Synthetic desk-scale classification datasets.

All generators are deterministic in ``(name, n, noise, seed)`` and return a
stratified 80/20 train/test split.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NAMES = ("two_spirals", "gaussian_blobs", "xor_grid", "bars")
SPIRAL_SCALE = 3.0
BAR_INTENSITY = 3.0


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    name: str
    n: int
    noise: float
    seed: int
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray

    @property
    def classes(self) -> int:
        return int(max(self.y_train.max(initial=0), self.y_test.max(initial=0))) + 1

    @property
    def input_shape(self) -> tuple:
        return self.x_train.shape[1:]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "noise": self.noise,
            "seed": self.seed,
            "input_shape": list(self.input_shape),
            "x_train": self.x_train.reshape(len(self.x_train), -1).tolist(),
            "y_train": self.y_train.tolist(),
            "x_test": self.x_test.reshape(len(self.x_test), -1).tolist(),
            "y_test": self.y_test.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        shape = tuple(d["input_shape"])

        def arr(key):
            a = np.array(d[key], dtype=np.float64)
            return a.reshape((len(a),) + shape)

        return cls(d["name"], d["n"], d["noise"], d["seed"], arr("x_train"),
                   np.array(d["y_train"], dtype=np.int64), arr("x_test"),
                   np.array(d["y_test"], dtype=np.int64))


def _class_sizes(n):
    return [n // 2, n - n // 2]


def _two_spirals(n, noise, rng):
    # one turn on the unit spiral r = 0.2..1, noise added there, then scaled
    # so the outer arm reaches radius 3
    xs, ys = [], []
    for label, count in enumerate(_class_sizes(n)):
        t = rng.uniform(0.0, 1.0, count)
        r = 0.2 + 0.8 * t
        theta = 2.0 * math.pi * t + label * math.pi
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        xs.append(SPIRAL_SCALE * (pts + noise * rng.standard_normal((count, 2))))
        ys.append(np.full(count, label))
    return np.concatenate(xs), np.concatenate(ys)


def _gaussian_blobs(n, noise, rng):
    # points in discs of radius 0.5 around (+-1.5, +-1.5); separable at noise 0
    xs, ys = [], []
    for label, count in enumerate(_class_sizes(n)):
        center = np.array([-1.5, -1.5]) if label == 0 else np.array([1.5, 1.5])
        r = 0.5 * np.sqrt(rng.uniform(0.0, 1.0, count))
        phi = rng.uniform(0.0, 2.0 * math.pi, count)
        pts = center + np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
        xs.append(pts + noise * rng.standard_normal((count, 2)))
        ys.append(np.full(count, label))
    return np.concatenate(xs), np.concatenate(ys)


def _xor_grid(n, noise, rng):
    # one square of side 0.8 per quadrant, centred at (+-0.5, +-0.5)
    xs, ys = [], []
    for label, count in enumerate(_class_sizes(n)):
        quadrant = rng.integers(0, 2, count)
        signs = np.where(quadrant[:, None] == 0, 1.0, -1.0) * np.array([1.0, 1.0 if label == 0 else -1.0])
        pts = signs * (0.5 + rng.uniform(-0.4, 0.4, (count, 2)))
        xs.append(pts + noise * rng.standard_normal((count, 2)))
        ys.append(np.full(count, label))
    return np.concatenate(xs), np.concatenate(ys)


def _bars(n, noise, rng):
    # 8x8 single-channel images: a horizontal (0) or vertical (1) bar. The
    # bars are brighter than 1 so first-layer responses leave TSSR's identity
    # region; bars are not linearly separable, so a linear net cannot solve them.
    xs, ys = [], []
    for label, count in enumerate(_class_sizes(n)):
        img = np.zeros((count, 1, 8, 8))
        pos = rng.integers(0, 8, count)
        for i, p in enumerate(pos):
            if label == 0:
                img[i, 0, p, :] = BAR_INTENSITY
            else:
                img[i, 0, :, p] = BAR_INTENSITY
        xs.append(img + noise * rng.standard_normal(img.shape))
        ys.append(np.full(count, label))
    return np.concatenate(xs), np.concatenate(ys)


_GENERATORS = {
    "two_spirals": _two_spirals,
    "gaussian_blobs": _gaussian_blobs,
    "xor_grid": _xor_grid,
    "bars": _bars,
}


def make_dataset(name: str, n: int, noise: float = 0.0, seed: int = 0) -> Dataset:
    if name not in _GENERATORS:
        raise DatasetError(f"unknown dataset {name!r}; choose from {', '.join(NAMES)}")
    if int(n) != n or n < 4:
        raise DatasetError(f"n must be an integer >= 4, got {n}")
    if not noise >= 0 or not math.isfinite(noise):
        raise DatasetError(f"noise must be finite and >= 0, got {noise}")
    rng = np.random.default_rng(seed)
    x, y = _GENERATORS[name](int(n), float(noise), rng)
    train, test = [], []
    for label in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == label))
        cut = len(idx) // 5
        test.append(idx[:cut])
        train.append(idx[cut:])
    train = rng.permutation(np.concatenate(train))
    test = rng.permutation(np.concatenate(test))
    return Dataset(name, int(n), float(noise), seed, x[train], y[train].astype(np.int64),
                   x[test], y[test].astype(np.int64))
