"""Time the compiled and pure-Python mode integrators on the same workload.

    python3 benchmarks/bench_kernels.py [--modes 200] [--steps 41] [--repeat 3]
"""

import argparse
import time

import numpy as np

from dskg import kernels


def bench(backend, mu2, times, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = kernels.propagate_steps(mu2, times, 3, 0.5, 3.0, 1.0, 3.25, 0.0, 1e-10, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=200)
    ap.add_argument("--steps", type=int, default=41)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    mu2 = np.linspace(0.0, 900.0, args.modes)
    times = np.linspace(1.0, 5.0, args.steps)
    results = {}
    for backend in kernels.available_backends():
        results[backend] = bench(backend, mu2, times, args.repeat)
        print(f"{backend:>9s}: {results[backend][0] * 1e3:9.2f} ms  ({args.modes} modes, {args.steps} times)")
    if len(results) == 2:
        (tc, oc), (tp, op) = results["compiled"], results["python"]
        print(f"  speedup: {tp / tc:9.1f}x   max |difference|: {np.max(np.abs(oc - op)):.2e}")
    else:
        print("compiled core not built; only the python backend is available")


if __name__ == "__main__":
    main()
