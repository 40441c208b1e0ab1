"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N] [--json out.json]

Times single right-hand-side evaluations (full and reduced) on chains of
growing size and one end-to-end pulse simulation, once per backend.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from kronred import _backend
from kronred.network import enumerate_complexes
from kronred.kinetics import full_rhs
from kronred.reduction import plan_reduction, reduced_rhs
from kronred.sim import SolverConfig, simulate_full, simulate_reduced
from kronred.surrogate import mm_chain


def per_call(fn, repeat: int) -> float:
    fn()  # warm caches (flat model, extension import)
    best = np.inf
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - start) / repeat)
    return best


def run(repeat: int) -> list[dict]:
    rows = []
    for n in (3, 5, 10):
        net = mm_chain(n, fast=(n // 2,), factor=100, k=10, km=5, influx=5, efflux=20)
        view = enumerate_complexes(net)
        x = np.linspace(0.5, 1.5, net.m)
        red = plan_reduction(net, view, [n // 2, n // 2 + 1] if n > 3 else [1], x)
        for backend in _backend.available():
            _backend.use(backend)
            rows.append(
                {
                    "case": f"chain-{n}",
                    "backend": backend,
                    "full_rhs_us": 1e6 * per_call(lambda: full_rhs(net, view, x), repeat),
                    "reduced_rhs_us": 1e6 * per_call(lambda: reduced_rhs(red, x), repeat),
                }
            )
    net = mm_chain(5, fast=(2,), factor=100, k=10, km=5, influx=5, efflux=20)
    view = enumerate_complexes(net)
    x0 = np.linspace(0.5, 1.5, net.m)
    red = plan_reduction(net, view, [2], x0)
    cfg = SolverConfig(t_end=5)
    for backend in _backend.available():
        _backend.use(backend)
        start = time.perf_counter()
        full = simulate_full(net, view, x0, cfg)
        mid = time.perf_counter()
        simulate_reduced(red, x0, cfg)
        end = time.perf_counter()
        rows.append(
            {
                "case": "pulse-sim chain-5",
                "backend": backend,
                "full_sim_ms": 1e3 * (mid - start),
                "reduced_sim_ms": 1e3 * (end - mid),
                "rhs_evals": full.stats["nfev"],
            }
        )
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--json", help="write the rows as JSON")
    args = ap.parse_args()
    previous = _backend.name
    try:
        rows = run(args.repeat)
    finally:
        _backend.use(previous)
    if "cython" not in _backend.available():
        print("compiled kernels not built; only the Python backend was timed")
    for row in rows:
        fields = "  ".join(f"{k}={v:.2f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items())
        print(fields)
    by = {(r["case"], r["backend"]): r for r in rows}
    for case in sorted({r["case"] for r in rows}):
        if (case, "cython") in by:
            py, cy = by[(case, "python")], by[(case, "cython")]
            for key in py:
                if key.endswith(("_us", "_ms")):
                    print(f"speedup {case} {key[:-3]}: {py[key] / cy[key]:.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
