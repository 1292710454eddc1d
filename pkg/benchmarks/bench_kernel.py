"""Compare the compiled and pure-Python event loops.

    python3 benchmarks/bench_kernel.py [--repeat 5]

Times full unbounded runs on random systems of several sizes, then a
101x101 sweep of the glancing pair, once per kernel.
"""
import argparse
import time

import numpy as np

from sticky_pep import _pykernel
from sticky_pep.systems import random_state

try:
    from sticky_pep import _ckernel
except ImportError:
    _ckernel = None


def corpus(n, count, seed=0):
    rng = np.random.default_rng(seed)
    return [random_state(rng, n, zero_frame=True) for _ in range(count)]


def time_runs(kernel, states, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for s in states:
            kernel.run_outcome(s.masses, s.positions, s.velocities, 1e-9, 1e-9)
        best = min(best, time.perf_counter() - t0)
    return best


def time_sweep(kernel):
    from sticky_pep.systems import glancing_pair

    base = glancing_pair()
    dxs = np.linspace(-2, 2, 101)
    dvs = np.linspace(-2, 2, 101)
    t0 = time.perf_counter()
    for dv in dvs:
        for dx in dxs:
            y0 = base.positions[0] + dx
            if y0 >= base.positions[1]:
                continue
            kernel.run_outcome(base.masses, (y0, base.positions[1]),
                               (base.velocities[0] + dv, base.velocities[1]), 1e-9, 1e-9)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--count", type=int, default=200)
    args = ap.parse_args()
    kernels = [("python", _pykernel)]
    if _ckernel is not None:
        kernels.append(("cython", _ckernel))
    else:
        print("compiled kernel not built; timing the pure-Python one only")

    print(f"{'n':>4} " + " ".join(f"{name:>12}" for name, _ in kernels) + "   speedup")
    for n in (2, 4, 8, 16, 32, 64):
        states = corpus(n, args.count)
        times = [time_runs(k, states, args.repeat) for _, k in kernels]
        per = [t / args.count * 1e6 for t in times]
        speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else ""
        print(f"{n:>4} " + " ".join(f"{p:10.2f}us" for p in per) + "  " + speed)
    sweeps = [time_sweep(k) for _, k in kernels]
    print("sweep 101x101: " + ", ".join(f"{name} {t:.3f}s" for (name, _), t in zip(kernels, sweeps)))


if __name__ == "__main__":
    main()
