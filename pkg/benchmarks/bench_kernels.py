"""Micro-benchmark for the numerical hot kernels.

Times the compiled extension against the pure numpy fallback on the three
operations the engine spends its streaming budget on: nearest-center
assignment, affine mini-batch epochs, and one-hidden-layer mini-batch
epochs. Sizes bracket the regimes the engine actually runs: short windows,
modest sample counts, small pools.

    python3 benchmarks/bench_kernels.py [--repeats 7] [--csv]
"""

import argparse
import importlib
import statistics
import time

import numpy as np


def _load_backends():
    backends = {}
    for name, module in (("numpy", "regimecast._kernels_numpy"),
                         ("native", "regimecast._kernels")):
        try:
            backends[name] = importlib.import_module(module)
        except ImportError:
            pass
    return backends


def _time(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def _cases(rng):
    cases = []
    for n, k, d in ((200, 8, 5), (2000, 32, 10), (20000, 64, 20)):
        pts = rng.normal(size=(n, d))
        centers = rng.normal(size=(k, d))

        def run(mod, pts=pts, centers=centers):
            mod.assign_labels(pts, centers)

        cases.append((f"assign_labels n={n} k={k} d={d}", run))

    for n, d in ((320, 5), (3200, 10), (32000, 20)):
        x = rng.normal(size=(n, d))
        y = rng.normal(size=n)
        order = np.arange(n, dtype=np.int64)

        def run(mod, x=x, y=y, order=order, d=d):
            w = np.zeros(d)
            b = np.zeros(1)
            for _ in range(5):
                mod.linear_sgd_epoch(x, y, order, 32, 0.01, 1e-4, w, b)

        cases.append((f"linear_sgd_epoch x5 n={n} d={d}", run))

    for n, d, h in ((320, 5, 8), (3200, 10, 16), (32000, 20, 32)):
        x = rng.normal(size=(n, d))
        y = rng.normal(size=n)
        order = np.arange(n, dtype=np.int64)
        w1_0 = rng.normal(size=(d, h)) * 0.1
        b1_0 = np.zeros(h)
        w2_0 = rng.normal(size=h) * 0.1

        def run(mod, x=x, y=y, order=order, w1_0=w1_0, b1_0=b1_0, w2_0=w2_0):
            w1 = w1_0.copy()
            b1 = b1_0.copy()
            w2 = w2_0.copy()
            b2 = np.zeros(1)
            for _ in range(5):
                mod.mlp_sgd_epoch(x, y, order, 32, 0.01, 1e-4, w1, b1, w2, b2, 0)

        cases.append((f"mlp_sgd_epoch x5 n={n} d={d} h={h}", run))
    return cases


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7,
                        help="timings per case; the median is reported")
    parser.add_argument("--csv", action="store_true",
                        help="emit comma-separated rows instead of a table")
    args = parser.parse_args()

    backends = _load_backends()
    if "native" not in backends:
        print("note: compiled extension not importable; timing numpy only")

    rng = np.random.default_rng(0)
    rows = []
    for label, run in _cases(rng):
        times = {name: _time(lambda mod=mod: run(mod), args.repeats)
                 for name, mod in backends.items()}
        speedup = (times["numpy"] / times["native"]
                   if "native" in times and times["native"] > 0 else float("nan"))
        rows.append((label, times.get("numpy"), times.get("native"), speedup))

    if args.csv:
        print("case,numpy_s,native_s,native_speedup")
        for label, tn, tc, sp in rows:
            print(f"{label},{tn!r},{tc!r},{sp!r}")
    else:
        width = max(len(r[0]) for r in rows)
        print(f"{'case':<{width}}  {'numpy':>10}  {'native':>10}  {'speedup':>8}")
        for label, tn, tc, sp in rows:
            tc_s = f"{tc * 1e3:9.3f}ms" if tc is not None else "       n/a"
            sp_s = f"{sp:7.2f}x" if sp == sp else "     n/a"
            print(f"{label:<{width}}  {tn * 1e3:9.3f}ms  {tc_s}  {sp_s}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
