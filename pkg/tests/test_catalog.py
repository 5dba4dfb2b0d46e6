import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from tssr import _backend
from tssr.catalog import (
    ActivationSpec,
    Kind,
    ParameterError,
    all_specs,
    eval,
    eval_batch,
    eval_grad,
    grad_batch,
    grad_point,
    kinks,
    parse_activation,
    sign,
    tssr_backward,
    tssr_forward,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
SPECS = all_specs()
IDS = [s.kind.label for s in SPECS]


class TestTSSRScalar:
    @pytest.mark.parametrize("x, want", [(4.0, 3.0), (-9.0, -5.0), (0.25, 0.25), (1.0, 1.0), (-1.0, -1.0), (0.0, 0.0)])
    def test_forward_values(self, x, want):
        assert tssr_forward(x) == want

    @pytest.mark.parametrize("x, want", [(4.0, 0.5), (100.0, 0.1), (-100.0, 0.1), (0.5, 1.0), (1.0, 1.0)])
    def test_backward_values(self, x, want):
        assert tssr_backward(x) == want

    def test_branches_meet_at_one(self):
        for s in (1.0, -1.0):
            assert tssr_forward(s) == s * (2.0 * math.sqrt(1.0) - 1.0)
            assert tssr_backward(s) == 1.0 / math.sqrt(1.0)

    def test_sign_of_zero(self):
        assert sign(0.0) == 0.0 and sign(-0.0) == 0.0
        assert tssr_forward(-0.0) == 0.0

    @given(finite)
    def test_odd(self, x):
        assert tssr_forward(-x) == -tssr_forward(x)
        assert tssr_backward(-x) == tssr_backward(x)

    @given(finite)
    def test_gradient_in_unit_interval(self, x):
        assert 0.0 < tssr_backward(x) <= 1.0

    @given(finite, finite)
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert tssr_forward(lo) <= tssr_forward(hi)

    @given(st.floats(min_value=-1.0, max_value=1.0))
    def test_identity_region(self, x):
        assert tssr_forward(x) == x

    @pytest.mark.parametrize("x", [1.5, 2.0, 7.0, 123.456, 1e6, 1e150, -3.0, -1e300])
    def test_against_mpmath(self, x):
        f, g = oracles.tssr_closed_form(x)
        np.testing.assert_allclose(tssr_forward(x), float(f), rtol=4e-16)
        np.testing.assert_allclose(tssr_backward(x), float(g), rtol=4e-16)


class TestActivationSpec:
    def test_defaults(self):
        assert ActivationSpec(Kind.PRELU).alpha == 0.25
        assert ActivationSpec(Kind.ELU).alpha == 0.5
        srs = ActivationSpec(Kind.SRS)
        assert (srs.alpha, srs.beta) == (2.0, 3.0)
        assert ActivationSpec(Kind.TSSR, alpha=5.0).alpha is None

    @pytest.mark.parametrize("kw", [
        dict(kind=Kind.ELU, alpha=0.0),
        dict(kind=Kind.SRS, beta=-1.0),
        dict(kind=Kind.SRS, alpha=1.0, beta=3.0),
        dict(kind=Kind.PRELU, alpha=float("nan")),
    ])
    def test_invalid_parameters(self, kw):
        with pytest.raises(ParameterError):
            ActivationSpec(**kw)

    def test_parse_and_token_round_trip(self):
        for spec in SPECS + [ActivationSpec(Kind.PRELU, 0.1), ActivationSpec(Kind.SRS, 5.0, 1.5)]:
            assert parse_activation(spec.token) == spec
            assert ActivationSpec.from_dict(spec.to_dict()) == spec
        assert parse_activation("softrootsign").kind is Kind.SRS
        assert parse_activation("softmax").kind is Kind.SOFTMAX_REDUCED

    @pytest.mark.parametrize("text", ["gelu", "prelu:gamma=1", "prelu:alpha=x", "srs:alpha"])
    def test_parse_errors(self, text):
        with pytest.raises(ParameterError):
            parse_activation(text)


class TestAgainstOracle:
    POINTS = [-30.0, -7.5, -2.0, -1.0, -0.3, -1e-4, 1e-4, 0.3, 1.0, 2.0, 7.5, 30.0]

    @pytest.mark.parametrize("spec", SPECS, ids=IDS)
    def test_values(self, spec):
        for x in self.POINTS:
            want = float(oracles.value(spec, x))
            np.testing.assert_allclose(eval(spec, x), want, rtol=1e-13, atol=1e-300, err_msg=f"x={x}")

    @pytest.mark.parametrize("spec", SPECS, ids=IDS)
    def test_gradients(self, spec):
        for x in self.POINTS:
            want = float(oracles.derivative(spec, x))
            np.testing.assert_allclose(eval_grad(spec, x), want, rtol=1e-12, atol=1e-300, err_msg=f"x={x}")

    def test_erf_against_mpmath(self):
        # Serf relies on libm erf
        for x in np.linspace(-6.0, 6.0, 241):
            np.testing.assert_allclose(math.erf(x), float(oracles.mp.erf(x)), rtol=1e-12, atol=1e-300)

    @pytest.mark.parametrize("spec", SPECS, ids=IDS)
    def test_extreme_inputs_finite(self, spec):
        for x in (-1e308, -800.0, -40.0, 40.0, 800.0, 1e308):
            assert math.isfinite(eval(spec, x))
            assert math.isfinite(eval_grad(spec, x))


class TestFiniteDifference:
    """Central differences with h = 1e-5 against the analytic gradient."""

    @pytest.mark.parametrize("spec", SPECS, ids=IDS)
    def test_thousand_points(self, spec):
        rng = np.random.default_rng(2024)
        xs = rng.uniform(-8.0, 8.0, 1000)
        for k in kinks(spec) + ((-1.0, 1.0) if spec.kind is Kind.TSSR else ()):
            xs = xs[np.abs(xs - k) > 1e-3]
        h = 1e-5
        fd = (np.asarray(eval_batch(spec, xs + h)) - np.asarray(eval_batch(spec, xs - h))) / (2 * h)
        g, _ = grad_batch(spec, xs)
        rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-8)
        assert rel.max() < 1e-5, xs[np.argmax(rel)]


class TestKinks:
    def test_relu_right_derivative(self):
        assert eval_grad("relu", -0.001) == 0.0
        assert eval_grad("relu", 0.001) == 1.0
        assert grad_point("relu", 0.0) == (1.0, True)
        assert grad_point("relu", 0.5) == (1.0, False)

    def test_kink_sets(self):
        assert kinks("relu") == (0.0,)
        assert kinks("prelu") == (0.0,)
        assert kinks("elu") == (0.0,)
        assert kinks(ActivationSpec(Kind.ELU, 1.0)) == ()
        assert kinks(ActivationSpec(Kind.PRELU, 1.0)) == ()
        assert kinks("tssr") == ()

    def test_kink_mask(self):
        g, mask = grad_batch("prelu", [-1.0, 0.0, -0.0, 2.0])
        np.testing.assert_array_equal(mask, [False, True, True, False])
        np.testing.assert_array_equal(g, [0.25, 1.0, 1.0, 1.0])


class TestBatch:
    def test_shape_and_readonly(self):
        xs = np.arange(24.0).reshape(2, 3, 4) - 12
        out = eval_batch("tssr", xs)
        assert out.shape == xs.shape and out.dtype == np.float64
        with pytest.raises(ValueError):
            out[0, 0, 0] = 1.0
        g, mask = grad_batch("tssr", xs)
        assert g.shape == mask.shape == xs.shape

    def test_empty(self):
        assert eval_batch("mish", np.empty(0)).shape == (0,)

    def test_accepts_lists_and_non_contiguous(self):
        xs = np.linspace(-5, 5, 40)[::3]
        np.testing.assert_array_equal(eval_batch("serf", xs), eval_batch("serf", list(xs)))

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            eval_batch("tssr", [1.0], backend="gpu")


SPECIAL = np.array([0.0, -0.0, 1.0, -1.0, np.nextafter(1.0, 2.0), np.nextafter(-1.0, -2.0),
                    5e-324, -5e-324, 2.2250738585072014e-308, 1e-300, 1e308, -1e308, 709.0, -745.0])


def _inputs():
    rng = np.random.default_rng(11)
    return np.concatenate([SPECIAL, rng.uniform(-60, 60, 5000), rng.standard_normal(2000) * 1e6])


@pytest.mark.parametrize("backend", sorted(_backend.available()))
class TestBackendsMatchScalar:
    @pytest.mark.parametrize("spec", SPECS, ids=IDS)
    def test_forward_bit_identical(self, backend, spec):
        xs = _inputs()
        want = np.array([eval(spec, x) for x in xs])
        np.testing.assert_array_equal(eval_batch(spec, xs, backend=backend), want)

    @pytest.mark.parametrize("spec", SPECS, ids=IDS)
    def test_grad_bit_identical(self, backend, spec):
        xs = _inputs()
        want = np.array([eval_grad(spec, x) for x in xs])
        np.testing.assert_array_equal(grad_batch(spec, xs, backend=backend)[0], want)

    def test_approximate_error(self, backend):
        xs = np.random.default_rng(3).uniform(-1e4, 1e4, 200_000)
        exact = eval_batch("tssr", xs)
        approx = eval_batch("tssr", xs, approximate=True, backend=backend)
        inner = np.abs(xs) <= 1
        np.testing.assert_array_equal(approx[inner], exact[inner])
        assert np.max(np.abs(approx - exact) / np.abs(exact)) < 1e-4


def test_backends_agree_on_approximation():
    avail = _backend.available()
    if len(avail) < 2:
        pytest.skip("compiled backend not built")
    xs = np.random.default_rng(5).uniform(-1e3, 1e3, 100_000)
    np.testing.assert_array_equal(eval_batch("tssr", xs, approximate=True, backend="compiled"),
                                  eval_batch("tssr", xs, approximate=True, backend="python"))


def test_forced_python_backend(monkeypatch):
    import importlib
    import subprocess
    import sys

    code = "import tssr; print(tssr.KERNEL_BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={**__import__("os").environ, "TSSR_FORCE_PYTHON": "1"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert importlib.import_module("tssr").KERNEL_BACKEND in ("compiled", "python")


@settings(max_examples=300)
@given(st.sampled_from(SPECS), finite)
def test_grad_point_matches_batch(spec, x):
    g, mask = grad_batch(spec, [x])
    p = grad_point(spec, x)
    assert (g[0], bool(mask[0])) == (p.value, p.kink)
    assert eval_batch(spec, [x])[0] == eval(spec, x) or math.isnan(eval(spec, x))
