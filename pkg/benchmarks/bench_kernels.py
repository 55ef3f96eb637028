"""Compare the compiled kernels against the pure-Python fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --counts-rows 500000 --em-n 200000
"""

import argparse
import time

import numpy as np

from gridsense import _pykernels
from gridsense.kernels import BACKEND

try:
    from gridsense import _ckernels
except ImportError:
    _ckernels = None


def best_of(func, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - start)
    return best


def bench_ordering(rows, k, rng):
    counts = np.ascontiguousarray(
        rng.multinomial(50 * k, np.full(k, 1.0 / k), size=rows), dtype=np.int64
    )
    timings = {"python": best_of(lambda: _pykernels.strict_ordering_violations(counts))}
    if _ckernels is not None:
        timings["compiled"] = best_of(
            lambda: _ckernels.strict_ordering_violations(counts)
        )
    return timings


def bench_em(n, k, iters, rng):
    means = np.linspace(-1.0, 1.0, k)
    y = rng.normal(means[rng.integers(0, k, size=n)], 0.05)
    means0 = np.ascontiguousarray(means + rng.normal(0.0, 0.02, size=k))
    weights0 = np.full(k, 1.0 / k)
    # tol=0 never converges, so every run costs exactly `iters` iterations
    args = (y, means0, weights0, 0.05, 0.0, iters, 1e-12 * n)
    timings = {"python": best_of(lambda: _pykernels.em_run(*args))}
    if _ckernels is not None:
        y_c = np.ascontiguousarray(y)
        c_args = (y_c, means0, weights0, 0.05, 0.0, iters, 1e-12 * n)
        timings["compiled"] = best_of(lambda: _ckernels.em_run(*c_args))
    return timings


def report(name, timings):
    py = timings["python"]
    line = f"{name:<28} python {py * 1e3:9.2f} ms"
    if "compiled" in timings:
        c = timings["compiled"]
        line += f"   compiled {c * 1e3:9.2f} ms   speedup {py / c:6.1f}x"
    else:
        line += "   (compiled backend unavailable)"
    print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--counts-rows", type=int, default=200_000)
    parser.add_argument("--k", type=int, default=7)
    parser.add_argument("--em-n", type=int, default=100_000)
    parser.add_argument("--em-iters", type=int, default=25)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"active backend: {BACKEND}")
    report(
        f"ordering ({args.counts_rows}x{args.k})",
        bench_ordering(args.counts_rows, args.k, rng),
    )
    report(
        f"em ({args.em_n} pts, {args.em_iters} it)",
        bench_em(args.em_n, args.k, args.em_iters, rng),
    )


if __name__ == "__main__":
    main()
