"""Numerical audit of five desirable activation properties.

The properties are: odd, monotone (non-decreasing), differentiable, unbounded
value range on both tails, and continuous gradient. Each check samples the
activation on a uniform grid and returns a verdict together with the
worst-case witness it found, so a failing verdict can always be re-checked
by hand.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from tssr.catalog import ActivationSpec, Kind, all_specs, eval_batch, grad_batch

PROPERTIES = ("odd", "monotone", "differentiable", "unbounded", "continuous_gradient")
COLUMN_TITLES = (
    "odd",
    "monotone",
    "differentiable",
    "unbounded value range",
    "continuous gradient",
)

# Published verdicts (odd, monotone, differentiable, unbounded, continuous
# gradient) for the comparison activations. Mish has no published row.
PUBLISHED = {
    Kind.SIGMOID: (False, True, True, False, True),
    Kind.RELU: (False, True, False, False, False),
    Kind.PRELU: (False, True, False, True, False),
    Kind.ELU: (False, True, True, False, False),
    Kind.SWISH: (False, False, True, False, True),
    Kind.TANH: (True, True, True, False, True),
    Kind.SOFTSIGN: (True, True, True, False, True),
    Kind.SOFTMAX_REDUCED: (False, False, True, False, True),
    Kind.SRS: (False, False, True, False, True),
    Kind.SERF: (False, False, True, False, True),
    Kind.TSSR: (True, True, True, True, True),
}

# softmax is vector-valued; any scalar reduction changes its properties
DECLARED_KINDS = frozenset({Kind.SOFTMAX_REDUCED})


class AuditConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AuditConfig:
    grid_lo: float = -50.0
    grid_hi: float = 50.0
    grid_points: int = 100001
    odd_tol: float = 1e-9
    mono_tol: float = 0.0
    diff_agree_tol: float = 1e-4
    diff_step: float = 1e-6
    unbounded_probe: float = 1e9
    unbounded_threshold: float = 1e3
    grad_jump_factor: float = 10.0

    def __post_init__(self):
        if not self.grid_lo < self.grid_hi:
            raise AuditConfigError("grid_lo must be < grid_hi")
        if self.grid_points < 3:
            raise AuditConfigError("grid_points must be >= 3")
        for name in ("odd_tol", "diff_agree_tol", "diff_step", "unbounded_probe",
                     "unbounded_threshold", "grad_jump_factor"):
            if not getattr(self, name) > 0:
                raise AuditConfigError(f"{name} must be > 0")
        if not self.mono_tol >= 0:
            raise AuditConfigError("mono_tol must be >= 0")

    def grid(self) -> np.ndarray:
        return np.linspace(self.grid_lo, self.grid_hi, self.grid_points)

    @property
    def spacing(self) -> float:
        return (self.grid_hi - self.grid_lo) / (self.grid_points - 1)

    @classmethod
    def from_mapping(cls, values: dict) -> "AuditConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise AuditConfigError(f"unknown audit setting {key!r}")
            kwargs[key] = int(raw) if key == "grid_points" else float(raw)
        return cls(**kwargs)


class Verdict(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    DECLARED = "declared"


class Witness(NamedTuple):
    """Where a check was closest to (or furthest past) failing.

    ``magnitude`` is the checked quantity at ``x``; ``values`` are the raw
    numbers it was computed from, in a per-check order documented on each
    ``check_*`` function.
    """

    x: float
    magnitude: float
    values: tuple


@dataclass(frozen=True)
class Check:
    verdict: Verdict
    holds: bool
    witness: Witness | None = None

    @property
    def symbol(self) -> str:
        mark = "✓" if self.holds else "✗"
        return mark + "*" if self.verdict is Verdict.DECLARED else mark

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict.value, "holds": self.holds}
        if self.witness is not None:
            d["witness"] = {
                "x": self.witness.x,
                "magnitude": self.witness.magnitude,
                "values": list(self.witness.values),
            }
        return d


def _measured(ok: bool, witness: Witness) -> Check:
    return Check(Verdict.HOLDS if ok else Verdict.FAILS, bool(ok), witness)


class _Func:
    """Batch evaluation of either a catalog activation or a plain callable."""

    def __init__(self, f):
        if isinstance(f, ActivationSpec):
            self.spec = f
            self.value = lambda xs: eval_batch(f, xs)
            self.grad = lambda xs: grad_batch(f, xs)[0]
        elif callable(f):
            self.spec = None
            self.value = lambda xs: np.asarray(f(xs), dtype=np.float64) * np.ones_like(xs)
            self.grad = None
        else:
            raise TypeError(f"cannot audit {f!r}")


def _cfg(cfg):
    return AuditConfig() if cfg is None else cfg


def check_odd(f, cfg: AuditConfig | None = None) -> Check:
    """Holds iff ``max |f(x) + f(-x)| <= odd_tol`` over the grid.

    Witness values: ``(f(x), f(-x))`` at the arg-max.
    """
    cfg, fn = _cfg(cfg), _Func(f)
    xs = cfg.grid()
    fp, fm = fn.value(xs), fn.value(-xs)
    err = np.abs(fp + fm)
    i = int(np.argmax(err))
    return _measured(err[i] <= cfg.odd_tol, Witness(float(xs[i]), float(err[i]), (float(fp[i]), float(fm[i]))))


def check_monotone(f, cfg: AuditConfig | None = None) -> tuple[Check, bool]:
    """Non-decreasing check over adjacent grid points.

    Returns the check and an informational strict-monotonicity flag. Witness
    is the largest decrease ``f(x_i) - f(x_{i+1})`` (negative when the
    function increases everywhere); values ``(f(x_i), f(x_{i+1}), x_{i+1})``.
    """
    cfg, fn = _cfg(cfg), _Func(f)
    xs = cfg.grid()
    ys = fn.value(xs)
    steps = np.diff(ys)
    i = int(np.argmin(steps))
    drop = float(-steps[i])
    w = Witness(float(xs[i]), drop, (float(ys[i]), float(ys[i + 1]), float(xs[i + 1])))
    return _measured(steps[i] >= -cfg.mono_tol, w), bool(np.all(steps > 0))


def check_differentiable(f, cfg: AuditConfig | None = None) -> Check:
    """Left and right difference quotients must agree within ``diff_agree_tol``.

    Witness values: ``(left_quotient, right_quotient)`` at the worst point.
    """
    cfg, fn = _cfg(cfg), _Func(f)
    xs = cfg.grid()
    h = cfg.diff_step
    y0 = fn.value(xs)
    left = (y0 - fn.value(xs - h)) / h
    right = (fn.value(xs + h) - y0) / h
    gap = np.abs(right - left)
    i = int(np.argmax(gap))
    w = Witness(float(xs[i]), float(gap[i]), (float(left[i]), float(right[i])))
    return _measured(gap[i] <= cfg.diff_agree_tol, w)


def check_unbounded(f, cfg: AuditConfig | None = None) -> Check:
    """Both tails must escape: ``|f(+-probe)| >= unbounded_threshold``.

    Witness is the tail with the smaller magnitude; values
    ``(f(probe), f(-probe))``.
    """
    cfg, fn = _cfg(cfg), _Func(f)
    p = cfg.unbounded_probe
    hi, lo = (float(v) for v in fn.value(np.array([p, -p])))
    x, mag = (p, abs(hi)) if abs(hi) <= abs(lo) else (-p, abs(lo))
    return _measured(mag >= cfg.unbounded_threshold, Witness(x, mag, (hi, lo)))


def check_continuous_gradient(f, cfg: AuditConfig | None = None) -> Check:
    """Bound every adjacent jump of the analytic gradient on the grid.

    A jump ``|g(x_{i+1}) - g(x_i)|`` is allowed up to
    ``grad_jump_factor * dx * L`` where ``L`` is the median jump rate
    ``|dg|/dx`` floored at 1. A step discontinuity produces a jump that does
    not shrink with ``dx`` and fails. Witness values:
    ``(g(x_i), g(x_{i+1}), x_{i+1}, bound)``.
    """
    cfg, fn = _cfg(cfg), _Func(f)
    if fn.grad is None:
        raise TypeError("continuous-gradient check needs a catalog activation")
    xs = cfg.grid()
    dx = cfg.spacing
    g = fn.grad(xs)
    jumps = np.abs(np.diff(g))
    rate = max(1.0, float(np.median(jumps)) / dx)
    bound = cfg.grad_jump_factor * dx * rate
    i = int(np.argmax(jumps))
    w = Witness(float(xs[i]), float(jumps[i]), (float(g[i]), float(g[i + 1]), float(xs[i + 1]), bound))
    return _measured(jumps[i] <= bound, w)


@dataclass(frozen=True)
class PropertyReport:
    spec: ActivationSpec
    odd: Check
    monotone: Check
    differentiable: Check
    unbounded: Check
    continuous_gradient: Check
    strictly_monotone: bool | None = None
    notes: tuple = field(default_factory=tuple)

    def checks(self) -> tuple[Check, ...]:
        return tuple(getattr(self, p) for p in PROPERTIES)

    def row(self) -> tuple[bool, ...]:
        return tuple(c.holds for c in self.checks())

    def to_dict(self) -> dict:
        d = {"activation": self.spec.to_dict(), "name": self.spec.name}
        for p in PROPERTIES:
            d[p] = getattr(self, p).to_dict()
        d["strictly_monotone"] = self.strictly_monotone
        d["notes"] = list(self.notes)
        return d


def audit(spec: ActivationSpec, cfg: AuditConfig | None = None) -> PropertyReport:
    cfg = _cfg(cfg)
    if spec.kind in DECLARED_KINDS:
        declared = [Check(Verdict.DECLARED, v) for v in PUBLISHED[spec.kind]]
        note = ("declared, not measured: softmax is vector-valued and its two-logit "
                "reduction is the sigmoid; verdicts copied from the published comparison")
        return PropertyReport(spec, *declared, notes=(note,))
    mono, strict = check_monotone(spec, cfg)
    return PropertyReport(
        spec,
        odd=check_odd(spec, cfg),
        monotone=mono,
        differentiable=check_differentiable(spec, cfg),
        unbounded=check_unbounded(spec, cfg),
        continuous_gradient=check_continuous_gradient(spec, cfg),
        strictly_monotone=strict,
    )


def discrepancies(report: PropertyReport) -> list[str]:
    """Columns where a measured verdict differs from the published row."""
    published = PUBLISHED.get(report.spec.kind)
    if published is None:
        return []
    out = []
    for prop, check, want in zip(PROPERTIES, report.checks(), published):
        if check.verdict is not Verdict.DECLARED and check.holds != want:
            out.append(prop)
    return out


_ELU_NOTE = (
    "differentiable measured {got} but published {want}: for ELU the derivative "
    "jumps from alpha to 1 at 0, so differentiable and continuous-gradient agree "
    "for every alpha (alpha=1 gives both true, alpha!=1 both false)"
)


def audit_matrix(cfg: AuditConfig | None = None) -> list[PropertyReport]:
    """Audit all twelve catalog activations with default parameters."""
    cfg = _cfg(cfg)
    reports = []
    for spec in all_specs():
        report = audit(spec, cfg)
        notes = list(report.notes)
        for prop in discrepancies(report):
            want = PUBLISHED[spec.kind][PROPERTIES.index(prop)]
            got = getattr(report, prop).holds
            if spec.kind is Kind.ELU and prop == "differentiable":
                notes.append(_ELU_NOTE.format(got=got, want=want))
            else:
                notes.append(f"{prop} measured {got} but published {want}")
        if spec.kind not in PUBLISHED:
            notes.append("no published row; measured only")
        reports.append(PropertyReport(
            report.spec, *report.checks(),
            strictly_monotone=report.strictly_monotone, notes=tuple(notes),
        ))
    return reports


def matrix_to_json(reports: list[PropertyReport], cfg: AuditConfig | None = None) -> str:
    payload = {
        "config": {f.name: getattr(_cfg(cfg), f.name) for f in fields(AuditConfig)},
        "reports": [r.to_dict() for r in reports],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def render_table(reports: list[PropertyReport]) -> str:
    """Aligned plain-text table with one row per activation."""
    header = ("function",) + COLUMN_TITLES
    rows = [(r.spec.name,) + tuple(c.symbol for c in r.checks()) for r in reports]
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]

    def fmt(row):
        return " | ".join(cell.center(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(row, widths)))

    rule = "-+-".join("-" * w for w in widths)
    lines = [fmt(header), rule] + [fmt(row) for row in rows]
    footnotes = [f"{r.spec.name}: {n}" for r in reports for n in r.notes]
    if any(c.verdict is Verdict.DECLARED for r in reports for c in r.checks()):
        footnotes.insert(0, "* declared, not measured")
    if footnotes:
        lines.append("")
        lines.extend(footnotes)
    return "\n".join(lines) + "\n"

