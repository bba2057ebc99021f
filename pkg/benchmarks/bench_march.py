"""Time the associate march with the compiled kernel and with the numpy fallback.

Usage: python3 benchmarks/bench_march.py [--grid 129] [--repeat 3] [--entry screw-motion]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from minlab import catalog
from minlab import associate
from minlab import kernels


def run(imm, theta, steps, backend):
    # the dispatcher in kernels uses the compiled kernel whenever it is built
    impl = kernels.march_lines if backend == "cython" else kernels.march_lines_py
    saved = associate.march_lines
    try:
        associate.march_lines = impl
        t0 = time.perf_counter()
        h, psi = associate.march_associate(imm, theta, steps)
        return time.perf_counter() - t0, h, psi
    finally:
        associate.march_lines = saved


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--entry", default="screw-motion")
    p.add_argument("--grid", type=int, default=129)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    imm = catalog.get_entry(args.entry).immersion(n=args.grid)
    theta = np.pi / 3
    backends = ["numpy"] + (["cython"] if kernels._compiled is not None else [])
    results = {}
    for b in backends:
        times = []
        for _ in range(args.repeat):
            dt, h, psi = run(imm, theta, args.steps, b)
            times.append(dt)
        results[b] = (min(times), h, psi)
        print(f"{b:7s} best of {args.repeat}: {min(times) * 1e3:9.1f} ms  (grid {args.grid}, {args.steps} substeps)")
    if "cython" in results:
        t_np, h_np, p_np = results["numpy"]
        t_cy, h_cy, p_cy = results["cython"]
        print(f"speedup {t_np / t_cy:.1f}x, max |h difference| {np.abs(h_np - h_cy).max():.2e}, "
              f"max |psi difference| {np.abs(p_np - p_cy).max():.2e}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
