"""Plain-text key-value config files.

Format::

    # comment
    [section]
    key = value

Keys before the first section header belong to the ``""`` section. Every
parsed value remembers its line number so validation errors can point at it.

Training configs use the sections ``dataset``, ``network`` and ``train``;
audit configs use ``audit``. See README.md for the full key list.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from tssr.catalog import ActivationSpec, ParameterError, parse_activation
from tssr.micro_nn.network import (
    Activation,
    Conv2D,
    Dense,
    Flatten,
    NetworkSpec,
    SoftmaxCrossEntropy,
    infer_shapes,
)
from tssr.micro_nn.training import OptimizerConfig


class ConfigError(ValueError):
    def __init__(self, message, path=None, line=None):
        self.path, self.line = path, line
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass(frozen=True)
class Entry:
    value: str
    line: int


_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_]+)\s*\]$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def parse(text: str, path: str = "<config>") -> dict[str, dict[str, Entry]]:
    sections: dict[str, dict[str, Entry]] = {"": {}}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1).lower()
            if current in sections and sections[current]:
                raise ConfigError(f"duplicate section [{current}]", path, lineno)
            sections.setdefault(current, {})
            continue
        key, eq, value = line.partition("=")
        key = key.strip().lower()
        if not eq or not _KEY.match(key):
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", path, lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r}", path, lineno)
        sections[current][key] = Entry(value.split(" #", 1)[0].strip(), lineno)
    return sections


def read(path) -> dict[str, dict[str, Entry]]:
    """Parse a config file; ``path`` may also name a bundled config."""
    p = Path(path)
    if not p.exists() and p.suffix == "" and p.name == str(path):
        bundled = resources.files("tssr") / "configs" / f"{path}.cfg"
        if bundled.is_file():
            return parse(bundled.read_text(encoding="utf-8"), f"<bundled {path}>")
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    return parse(text, str(path))


class _Section:
    """Typed access to one section, reporting line numbers on failure."""

    def __init__(self, name, entries, path):
        self.name, self.entries, self.path = name, entries, path
        self.used = set()

    def get(self, key, conv, default=None, required=False):
        entry = self.entries.get(key)
        if entry is None:
            if required:
                raise ConfigError(f"[{self.name}] missing required key {key!r}", self.path)
            return default
        self.used.add(key)
        try:
            return conv(entry.value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{self.name}] {key}: {exc}", self.path, entry.line) from None

    def line(self, key):
        entry = self.entries.get(key)
        return entry.line if entry else None

    def finish(self):
        for key, entry in self.entries.items():
            if key not in self.used:
                raise ConfigError(f"[{self.name}] unknown key {key!r}", self.path, entry.line)


def _int(s):
    return int(s, 10)


def _list(s):
    return [item.strip() for item in s.split(",") if item.strip()]


def parse_layers(text: str, input_shape: tuple, activation: ActivationSpec) -> tuple:
    """Turn ``"conv 4 3 1 1, act, flatten, dense 2"`` into layer specs.

    ``dense OUT``; ``conv OUT KERNEL [STRIDE [PADDING]]``; ``act`` inserts the
    activation under test; ``flatten``. Input sizes are inferred and a
    softmax cross-entropy head is appended.
    """
    shape = tuple(input_shape)
    layers = []
    for token in _list(text):
        words = token.split()
        op, args = words[0].lower(), [int(w) for w in words[1:]]
        if op == "dense" and len(args) == 1:
            if len(shape) != 1:
                raise ValueError(f"dense after non-flat shape {shape}; add flatten")
            layers.append(Dense(shape[0], args[0]))
            shape = (args[0],)
        elif op == "conv" and 2 <= len(args) <= 4:
            out, k = args[0], args[1]
            stride = args[2] if len(args) > 2 else 1
            pad = args[3] if len(args) > 3 else 0
            if len(shape) != 3:
                raise ValueError(f"conv needs a (C, H, W) input, got {shape}")
            layers.append(Conv2D(shape[0], out, k, stride, pad))
            shape = (out, (shape[1] + 2 * pad - k) // stride + 1, (shape[2] + 2 * pad - k) // stride + 1)
        elif op == "act" and not args:
            layers.append(Activation(activation))
        elif op == "flatten" and not args:
            layers.append(Flatten())
            n = 1
            for d in shape:
                n *= d
            shape = (n,)
        else:
            raise ValueError(f"bad layer {token!r}")
    layers.append(SoftmaxCrossEntropy())
    return tuple(layers)


@dataclass(frozen=True)
class TrainConfig:
    dataset: str
    n: int
    noise: float
    dataset_seed: int
    layers: str
    init_seed: int
    init_scheme: str
    optimizer: OptimizerConfig
    data_seed: int
    activations: tuple

    def network_spec(self, activation: ActivationSpec, input_shape: tuple) -> NetworkSpec:
        return NetworkSpec(input_shape, parse_layers(self.layers, input_shape, activation),
                           self.init_seed, self.init_scheme)

    def to_dict(self) -> dict:
        return {
            "dataset": {"name": self.dataset, "n": self.n, "noise": self.noise, "seed": self.dataset_seed},
            "network": {"layers": self.layers, "init_seed": self.init_seed, "init_scheme": self.init_scheme},
            "train": {
                "learning_rate": self.optimizer.learning_rate,
                "momentum": self.optimizer.momentum,
                "batch_size": self.optimizer.batch_size,
                "epochs": self.optimizer.epochs,
                "data_seed": self.data_seed,
                "activations": [a.token for a in self.activations],
            },
        }


def load_train_config(path) -> TrainConfig:
    sections = read(path)
    path = str(path)
    for name, entries in sections.items():
        if name not in ("", "dataset", "network", "train") or (name == "" and entries):
            line = min(e.line for e in entries.values()) if entries else None
            raise ConfigError(f"unexpected section [{name}]" if name else "keys outside a section", path, line)
    ds = _Section("dataset", sections.get("dataset", {}), path)
    net = _Section("network", sections.get("network", {}), path)
    tr = _Section("train", sections.get("train", {}), path)

    def acts(s):
        # whitespace-separated, since SRS parameters use commas
        return tuple(parse_activation(a.rstrip(",")) for a in s.split() if a.rstrip(","))

    try:
        optimizer = OptimizerConfig(
            learning_rate=tr.get("learning_rate", float, 0.05),
            momentum=tr.get("momentum", float, 0.9),
            batch_size=tr.get("batch_size", _int, 32),
            epochs=tr.get("epochs", _int, 100),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[train] {exc}", path, tr.line("learning_rate")) from None
    try:
        activations = tr.get("activations", acts, None, required=True)
    except ParameterError as exc:
        raise ConfigError(f"[train] activations: {exc}", path, tr.line("activations")) from None
    if not activations:
        raise ConfigError("[train] activations is empty", path, tr.line("activations"))
    cfg = TrainConfig(
        dataset=ds.get("name", str, required=True),
        n=ds.get("n", _int, required=True),
        noise=ds.get("noise", float, 0.0),
        dataset_seed=ds.get("seed", _int, 0),
        layers=net.get("layers", str, required=True),
        init_seed=net.get("init_seed", _int, 0),
        init_scheme=net.get("init_scheme", str, "auto"),
        optimizer=optimizer,
        data_seed=tr.get("data_seed", _int, 0),
        activations=activations,
    )
    for section in (ds, net, tr):
        section.finish()
    if cfg.init_scheme not in ("auto", "he", "xavier"):
        raise ConfigError("[network] init_scheme must be auto, he or xavier", path, net.line("init_scheme"))
    return cfg


def check_network(cfg: TrainConfig, input_shape: tuple, path: str, line=None):
    """Build the network once so layer errors surface as config errors."""
    try:
        infer_shapes(cfg.network_spec(cfg.activations[0], input_shape))
    except ValueError as exc:
        raise ConfigError(f"[network] layers: {exc}", path, line) from None


def load_audit_config(path):
    from tssr.audit import AuditConfig, AuditConfigError

    sections = read(path)
    path = str(path)
    entries = dict(sections.get("audit", {}))
    for name, extra in sections.items():
        if name not in ("", "audit") or (name == "" and extra):
            line = min(e.line for e in extra.values()) if extra else None
            raise ConfigError(f"unexpected section [{name}]" if name else "keys outside [audit]", path, line)
    values = {}
    for key, entry in entries.items():
        try:
            values[key] = float(entry.value) if key != "grid_points" else _int(entry.value)
        except ValueError:
            raise ConfigError(f"[audit] {key}: not a number: {entry.value!r}", path, entry.line) from None
    try:
        return AuditConfig.from_mapping(values)
    except (AuditConfigError, TypeError) as exc:
        line = next((e.line for k, e in entries.items() if k in str(exc)), None)
        raise ConfigError(f"[audit] {exc}", path, line) from None

