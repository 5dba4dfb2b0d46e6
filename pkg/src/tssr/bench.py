"""Timing comparison of the compiled and pure-Python kernel backends."""
from __future__ import annotations

import time

import numpy as np

from tssr import _backend
from tssr.catalog import ActivationSpec, Kind, eval_batch, grad_batch


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(specs, n=1_000_000, repeat=3, seed=0, approximate=False, backends=None):
    """Best-of-``repeat`` seconds per (activation, backend, operation).

    Inputs are uniform on [-50, 50]. The approximate TSSR rows also report
    the maximum relative error against the exact kernel.
    """
    xs = np.random.default_rng(seed).uniform(-50.0, 50.0, n)
    names = backends or list(_backend.available())
    rows = []
    for spec in specs:
        for name in names:
            rows.append({
                "activation": spec.name, "backend": name, "op": "forward",
                "seconds": _best_of(lambda: eval_batch(spec, xs, backend=name), repeat),
            })
            rows.append({
                "activation": spec.name, "backend": name, "op": "grad",
                "seconds": _best_of(lambda: grad_batch(spec, xs, backend=name), repeat),
            })
    if approximate:
        tssr = ActivationSpec(Kind.TSSR)
        exact = eval_batch(tssr, xs)
        for name in names:
            approx = eval_batch(tssr, xs, approximate=True, backend=name)
            nz = exact != 0
            err = float(np.max(np.abs(approx[nz] - exact[nz]) / np.abs(exact[nz]))) if nz.any() else 0.0
            rows.append({
                "activation": "TSSR", "backend": name, "op": "forward_approx",
                "seconds": _best_of(lambda: eval_batch(tssr, xs, approximate=True, backend=name), repeat),
                "max_rel_error": err,
            })
    for row in rows:
        row["ns_per_element"] = row["seconds"] / n * 1e9
    return rows


def render(rows) -> str:
    header = f"{'activation':20s} {'op':15s} {'backend':9s} {'ns/elem':>10s}"
    lines = [header, "-" * len(header)]
    for r in rows:
        extra = f"  max rel err {r['max_rel_error']:.2e}" if "max_rel_error" in r else ""
        lines.append(f"{r['activation']:20s} {r['op']:15s} {r['backend']:9s} {r['ns_per_element']:10.2f}{extra}")
    return "\n".join(lines) + "\n"
