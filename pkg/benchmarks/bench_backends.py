"""Per-step cost of the compiled and pure-Python chain kernels.

    python3 benchmarks/bench_backends.py [--model temperature|dense]
                                         [--dims 100 1000 10000] [--json out.json]

Each cell is the best of ``--repeats`` timings of a chain run (and of a
burned-in running average of ``max``) with roughly the same total work.
"""

import argparse
import json
import time

import gausschain as gc
from gausschain import _backend
from gausschain.chain import run
from gausschain.estimators import chain_average

WORK = 20_000_000  # steps * d per timing


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_model(kind, d):
    if kind == "dense":
        return gc.DenseCorrelation(gc.temperature_model(d).materialize())
    return gc.temperature_model(d)


def bench(kind, dims, repeats):
    rows = []
    for d in dims:
        model = make_model(kind, d)
        h = gc.Max()
        n = max(200, WORK // d)
        for name in _backend.available():
            with _backend.use(name):
                t_run = best_of(lambda: run(model, stream=gc.RngStream(1), n=n), repeats)
                t_avg = best_of(
                    lambda: chain_average(model, h, n, n // 2, stream=gc.RngStream(1)), repeats
                )
            rows.append({
                "model": kind,
                "d": d,
                "backend": name,
                "steps": n,
                "runUsPerStep": 1e6 * t_run / n,
                "averageUsPerStep": 1e6 * t_avg / n,
            })
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", choices=["temperature", "dense"], default="temperature")
    ap.add_argument("--dims", type=int, nargs="+", default=[100, 1000, 10_000])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args()

    rows = bench(args.model, args.dims, args.repeats)
    print(f"model: {args.model}")
    print(f"{'d':>7} {'backend':>8} {'steps':>8} {'run us/step':>12} {'avg us/step':>12}")
    for r in rows:
        print(f"{r['d']:>7} {r['backend']:>8} {r['steps']:>8} "
              f"{r['runUsPerStep']:>12.2f} {r['averageUsPerStep']:>12.2f}")
    by = {(r["d"], r["backend"]): r for r in rows}
    for d in args.dims:
        if (d, "cython") in by and (d, "python") in by:
            speedup = by[d, "python"]["averageUsPerStep"] / by[d, "cython"]["averageUsPerStep"]
            print(f"d={d}: compiled kernel {speedup:.1f}x faster for averaging")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
