import pytest

from tssr.audit import AuditConfig
from tssr.catalog import ActivationSpec, Kind
from tssr.configfile import ConfigError, load_audit_config, load_train_config, parse, parse_layers
from tssr.micro_nn.network import Conv2D, Dense, Flatten, SoftmaxCrossEntropy

GOOD = """\
# comment
[dataset]
name = xor_grid
n = 100   # trailing comment
noise = 0.1

[network]
layers = dense 8, act, dense 2

[train]
epochs = 3
activations = TSSR srs:alpha=4,beta=1 ReLU,
"""


def write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_good(tmp_path):
    cfg = load_train_config(write(tmp_path, GOOD))
    assert cfg.dataset == "xor_grid" and cfg.n == 100 and cfg.noise == 0.1
    assert cfg.optimizer.epochs == 3 and cfg.optimizer.momentum == 0.9
    assert cfg.activations == (ActivationSpec(Kind.TSSR), ActivationSpec(Kind.SRS, 4.0, 1.0),
                               ActivationSpec(Kind.RELU))
    assert cfg.to_dict()["train"]["activations"][1] == "SRS:alpha=4.0,beta=1.0"


@pytest.mark.parametrize("bad, line", [
    (GOOD.replace("n = 100", "n = many"), 4),
    (GOOD.replace("epochs = 3", "epochs = 3\nlr = 1"), 12),
    (GOOD.replace("noise = 0.1", "noise = 0.1\nnoise = 0.2"), 6),
    (GOOD.replace("[network]", "network"), 7),
    (GOOD.replace("ReLU,", "gelu"), 12),
])
def test_errors_carry_line(tmp_path, bad, line):
    with pytest.raises(ConfigError) as exc:
        load_train_config(write(tmp_path, bad))
    assert exc.value.line == line
    assert f":{line}:" in str(exc.value)


def test_missing_key(tmp_path):
    with pytest.raises(ConfigError, match="layers"):
        load_train_config(write(tmp_path, GOOD.replace("layers = dense 8, act, dense 2", "")))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_train_config(tmp_path / "nope.cfg")


@pytest.mark.parametrize("name", ["two_spirals", "gaussian_blobs", "xor_grid", "bars_conv"])
def test_bundled(name):
    cfg = load_train_config(name)
    assert len(cfg.activations) == 12


def test_parse_layers():
    layers = parse_layers("conv 4 3 1 1, act, conv 8 3 2 1, flatten, dense 2", (1, 8, 8), ActivationSpec(Kind.TSSR))
    assert layers[0] == Conv2D(1, 4, 3, 1, 1)
    assert layers[2] == Conv2D(4, 8, 3, 2, 1)
    assert isinstance(layers[3], Flatten) and layers[4] == Dense(128, 2)
    assert isinstance(layers[-1], SoftmaxCrossEntropy)
    with pytest.raises(ValueError):
        parse_layers("pool 2", (2,), ActivationSpec(Kind.TSSR))


def test_audit_config(tmp_path):
    assert load_audit_config("audit_default") == AuditConfig()
    cfg = load_audit_config(write(tmp_path, "[audit]\ngrid_points = 1001\nodd_tol = 1e-6\n"))
    assert cfg.grid_points == 1001 and cfg.odd_tol == 1e-6
    with pytest.raises(ConfigError) as exc:
        load_audit_config(write(tmp_path, "[audit]\ngrid_lo = 5\ngrid_hi = 1\n"))
    with pytest.raises(ConfigError) as exc:
        load_audit_config(write(tmp_path, "[audit]\n\nodd_tol = x\n"))
    assert exc.value.line == 3


def test_duplicate_section():
    with pytest.raises(ConfigError):
        parse("[a]\nx = 1\n[a]\ny = 2\n")
