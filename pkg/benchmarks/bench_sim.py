"""Time the compiled and pure-Python round kernels on the same workloads.

    python benchmarks/bench_sim.py [--reps R]

Both kernels must return identical samples; the script checks that too.
"""
import argparse
import time

import numpy as np

import p2pspread.stochastic as sim

WORKLOADS = [
    ("list", 64, 1),
    ("nolist", 64, 1),
    ("list", 1024, 1),
    ("list", 1024, 4),
    ("nolist", 1024, 1),
]


def timed(backend, cfg):
    sim.set_backend(backend)
    t0 = time.perf_counter()
    st = sim.simulate(cfg)
    return time.perf_counter() - t0, st.samples


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    if sim._ckernel is None:
        raise SystemExit("compiled kernel not built; run pip install -e . first")
    print(f"{'scenario':8} {'N':>6} {'M':>3} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for scenario, n, m in WORKLOADS:
        cfg = sim.SimConfig(n, m, scenario, args.seed, args.reps)
        tp, sp = timed("python", cfg)
        tc, sc = timed("cython", cfg)
        if not np.array_equal(sp, sc):
            raise SystemExit(f"kernels disagree on {scenario} N={n} M={m}")
        print(f"{scenario:8} {n:6d} {m:3d} {tp:10.3f} {tc:10.4f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
