import json

import numpy as np
import pytest

from tssr.micro_nn.datasets import NAMES, Dataset, DatasetError, make_dataset


@pytest.mark.parametrize("name", NAMES)
def test_deterministic(name):
    a, b = make_dataset(name, 100, 0.1, 3), make_dataset(name, 100, 0.1, 3)
    for key in ("x_train", "y_train", "x_test", "y_test"):
        np.testing.assert_array_equal(getattr(a, key), getattr(b, key))
    assert not np.array_equal(a.x_train, make_dataset(name, 100, 0.1, 4).x_train)


@pytest.mark.parametrize("name", NAMES)
def test_stratified_split(name):
    ds = make_dataset(name, 101, 0.05, 0)
    assert len(ds.y_train) + len(ds.y_test) == 101
    counts = np.bincount(ds.y_test)
    np.testing.assert_array_equal(counts, [50 // 5, 51 // 5])


def test_spiral_balance():
    ds = make_dataset("two_spirals", 2000, 0.05, 7)
    y = np.concatenate([ds.y_train, ds.y_test])
    np.testing.assert_array_equal(np.bincount(y), [1000, 1000])
    assert len(ds.y_test) == 400


def test_blobs_separable_without_noise():
    ds = make_dataset("gaussian_blobs", 100, 0.0, 1)
    x = np.concatenate([ds.x_train, ds.x_test])
    y = np.concatenate([ds.y_train, ds.y_test])
    side = x.sum(axis=1) > 0
    np.testing.assert_array_equal(side, y == 1)


def test_xor_labels():
    ds = make_dataset("xor_grid", 200, 0.0, 2)
    prod = ds.x_train[:, 0] * ds.x_train[:, 1]
    np.testing.assert_array_equal(prod < 0, ds.y_train == 1)


def test_bars_shape():
    ds = make_dataset("bars", 20, 0.0, 0)
    assert ds.input_shape == (1, 8, 8) and ds.classes == 2
    img, label = ds.x_train[0, 0], ds.y_train[0]
    lit = img > 0
    assert (lit.any(axis=1).sum() == 1) == (label == 0)


@pytest.mark.parametrize("args", [("mnist", 100, 0.0), ("xor_grid", 3, 0.0), ("xor_grid", 10, -0.1),
                                  ("xor_grid", 10, float("nan")), ("xor_grid", 10.5, 0.0)])
def test_invalid(args):
    with pytest.raises(DatasetError):
        make_dataset(*args)


def test_json_round_trip():
    ds = make_dataset("bars", 30, 0.2, 1)
    back = Dataset.from_dict(json.loads(json.dumps(ds.to_dict())))
    np.testing.assert_array_equal(back.x_train, ds.x_train)
    np.testing.assert_array_equal(back.y_test, ds.y_test)
    assert back.input_shape == ds.input_shape
