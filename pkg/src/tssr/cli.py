"""Command-line front end: ``tssr curve|pointcloud|audit|train|bench``.

Relative ``--out`` paths resolve against ``$TSSR_OUTPUT_DIR`` when it is set.
Exit codes: 0 ok, 2 usage, 3 config, 4 I/O, 5 precondition, 6 divergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from tssr import audit as audit_mod
from tssr import bench as bench_mod
from tssr.catalog import ActivationSpec, Kind, ParameterError, eval_batch, grad_batch, parse_activation
from tssr.configfile import ConfigError, check_network, load_audit_config, load_train_config, read
from tssr.micro_nn.datasets import DatasetError, make_dataset
from tssr.micro_nn.training import train

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_PRECONDITION = 5
EXIT_DIVERGED = 6

OUTPUT_DIR_ENV = "TSSR_OUTPUT_DIR"


class PreconditionError(ValueError):
    pass


class OutputError(OSError):
    pass


def fmt(v: float) -> str:
    return "%.17g" % v


def resolve_out(out, default_name: str) -> Path:
    base = os.environ.get(OUTPUT_DIR_ENV)
    p = Path(out) if out else Path(default_name)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_text(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from exc


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def curve_rows(specs, lo, hi, n):
    if not lo < hi:
        raise PreconditionError(f"need lo < hi, got lo={lo} hi={hi}")
    if n < 2:
        raise PreconditionError(f"need n >= 2, got {n}")
    xs = np.linspace(lo, hi, n)
    rows = []
    for spec in specs:
        f = eval_batch(spec, xs)
        g, kink = grad_batch(spec, xs)
        for x, fv, gv, k in zip(xs, f, g, kink):
            rows.append([spec.token, fmt(x), fmt(fv), fmt(gv), int(k)])
    return rows


def cmd_curve(args) -> int:
    specs = args.activation or [ActivationSpec(Kind.TSSR)]
    rows = curve_rows(specs, args.lo, args.hi, args.n)
    out = resolve_out(args.out, "curve.csv")
    write_text(out, csv_text(["activation", "x", "f", "grad", "kink"], rows))
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def pointcloud(spec, n, seed, sigma=1.0):
    """Standard-normal 2-D cloud (scaled by ``sigma``) and its image under ``spec``."""
    if n < 1:
        raise PreconditionError(f"need n >= 1, got {n}")
    if not sigma > 0:
        raise PreconditionError(f"need sigma > 0, got {sigma}")
    pts = sigma * np.random.default_rng(seed).standard_normal((n, 2))
    return pts, np.asarray(eval_batch(spec, pts))


def cmd_pointcloud(args) -> int:
    spec = args.activation[0] if args.activation else ActivationSpec(Kind.TSSR)
    if args.activation and len(args.activation) > 1:
        raise PreconditionError("pointcloud takes a single --activation")
    pts, moved = pointcloud(spec, args.n, args.seed, args.sigma)
    rows = [["input", i, fmt(x), fmt(y)] for i, (x, y) in enumerate(pts)]
    rows += [["transformed", i, fmt(x), fmt(y)] for i, (x, y) in enumerate(moved)]
    out = resolve_out(args.out, "pointcloud.csv")
    write_text(out, csv_text(["cloud", "index", "x", "y"], rows))
    meta = {"activation": spec.token, "n": args.n, "seed": args.seed, "sigma": args.sigma,
            "distribution": "normal", "columns": ["cloud", "index", "x", "y"]}
    meta_path = out.with_name(out.name + ".meta.json")
    write_text(meta_path, dumps(meta))
    print(f"wrote {2 * args.n} points to {out}")
    return EXIT_OK


def cmd_audit(args) -> int:
    cfg = load_audit_config(args.config) if args.config else audit_mod.AuditConfig()
    reports = audit_mod.audit_matrix(cfg)
    out = resolve_out(args.out, "audit.json")
    table = audit_mod.render_table(reports)
    write_text(out, audit_mod.matrix_to_json(reports, cfg))
    write_text(out.with_suffix(".txt"), table)
    sys.stdout.write(table)
    return EXIT_OK


def summary_table(cfg, runs) -> str:
    """Metrics down, activations across."""
    names = [r["activation"] for r in runs]
    metrics = [
        ("status", lambda r: r["status"] if r["status"] == "ok" else f"diverged@{r['diverged_epoch']}"),
        ("init", lambda r: r["init_scheme"]),
        ("train loss", lambda r: _last(r, "train_loss", "{:.4f}")),
        ("train acc %", lambda r: _last(r, "train_acc", "{:.2f}", 100)),
        ("test acc %", lambda r: _last(r, "test_acc", "{:.2f}", 100)),
        ("best test acc %", lambda r: "{:.2f}".format(100 * max((e["test_acc"] for e in r["per_epoch"]), default=0))),
    ]
    header = ["metric"] + names
    body = [[label] + [f(r) for r in runs] for label, f in metrics]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = [" | ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths)))
             for row in [header] + body]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    title = f"{cfg.dataset} (n={cfg.n}, noise={cfg.noise:g}), {cfg.optimizer.epochs} epochs"
    return title + "\n" + "\n".join(lines) + "\n"


def _last(run, key, pattern, scale=1):
    if not run["per_epoch"]:
        return "-"
    v = run["per_epoch"][-1][key]
    return "nan" if v is None else pattern.format(v * scale)


def run_train_config(cfg, path="<config>"):
    """Train every listed activation; returns the JSON-ready result document."""
    try:
        dataset = make_dataset(cfg.dataset, cfg.n, cfg.noise, cfg.dataset_seed)
    except DatasetError as exc:
        raise ConfigError(f"[dataset] {exc}", path) from None
    layers_line = read(path).get("network", {}).get("layers")
    check_network(cfg, dataset.input_shape, str(path), layers_line.line if layers_line else None)
    runs = []
    for act in cfg.activations:
        spec = cfg.network_spec(act, dataset.input_shape)
        result = train(spec, dataset, cfg.optimizer, cfg.data_seed)
        runs.append({"activation": act.token, **result.to_dict()})
    return {"config": cfg.to_dict(), "runs": runs}


def cmd_train(args) -> int:
    cfg = load_train_config(args.config)
    doc = run_train_config(cfg, args.config)
    out = resolve_out(args.out, "train.json")
    table = summary_table(cfg, doc["runs"])
    write_text(out, dumps(doc))
    write_text(out.with_suffix(".txt"), table)
    sys.stdout.write(table)
    if any(r["status"] != "ok" for r in doc["runs"]):
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.n < 1 or args.repeat < 1:
        raise PreconditionError("need n >= 1 and repeat >= 1")
    specs = args.activation or [ActivationSpec(k) for k in Kind]
    rows = bench_mod.run(specs, args.n, args.repeat, args.seed, approximate=args.approx)
    table = bench_mod.render(rows)
    sys.stdout.write(table)
    if args.out:
        write_text(resolve_out(args.out, "bench.json"), dumps({"n": args.n, "repeat": args.repeat, "rows": rows}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _activation(text):
    try:
        return parse_activation(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tssr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def act(p, help_text="activation, e.g. TSSR or prelu:alpha=0.1 (repeatable)"):
        p.add_argument("--activation", action="append", type=_activation, help=help_text)

    p = sub.add_parser("curve", help="function and gradient samples as CSV")
    act(p)
    p.add_argument("--lo", type=float, default=-4.0)
    p.add_argument("--hi", type=float, default=4.0)
    p.add_argument("--n", type=int, default=801)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("pointcloud", help="normal point cloud before/after an activation")
    act(p, "activation to apply (default TSSR)")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pointcloud)

    p = sub.add_parser("audit", help="property audit matrix as JSON and a text table")
    p.add_argument("--config", help="audit config file (default settings when absent)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("train", help="train every configured activation")
    p.add_argument("--config", required=True, help="config file or bundled name, e.g. two_spirals")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="time compiled vs Python kernels")
    act(p)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--approx", action="store_true", help="include the approximate TSSR kernel")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PreconditionError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
