"""Compiled vs pure-Python Wigner kernel.

    python3 benchmarks/bench_wigner.py --dim 40 --grid 201 --repeat 3
"""
import argparse
import time

import numpy as np

from qamem import fockspace as fs
from qamem import _kernels


def timed(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=40)
    ap.add_argument("--grid", type=int, default=201)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    rho = fs.random_density_matrix(args.dim, rng)
    x = np.linspace(-6, 6, args.grid)

    t_py, w_py = timed(lambda: _kernels.wigner_grid_py(rho, x, x), args.repeat)
    print(f"python   dim={args.dim} grid={args.grid}^2  {t_py:8.3f} s")
    if _kernels.wigner_grid_c is None:
        print("compiled backend not built; nothing to compare")
        return 0
    t_c, w_c = timed(
        lambda: _kernels.wigner_grid_c(np.ascontiguousarray(rho), np.ascontiguousarray(x), np.ascontiguousarray(x)),
        args.repeat,
    )
    print(f"compiled dim={args.dim} grid={args.grid}^2  {t_c:8.3f} s")
    print(f"speedup {t_py / t_c:.2f}x   max |diff| {np.abs(w_py - w_c).max():.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
