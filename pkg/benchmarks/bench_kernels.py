"""Time the compiled and numpy diagnostics kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 32] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from activescalar import _kernels
from activescalar._kernels import _pykernels
from activescalar.bmo import dyadic_sides
from activescalar.grid import Grid

try:
    from activescalar._kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(n):
    grid = Grid((n, n, n))
    f = np.random.default_rng(0).standard_normal(grid.shape)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[: n // 2, : n // 2, : n // 2] = True
    sides = dyadic_sides(grid.dims)
    return {
        "truncated_energy": lambda impl: _kernels.truncated_energy(
            f, 0.3, grid.spacing, None, impl),
        "truncated_energy_masked": lambda impl: _kernels.truncated_energy(
            f, 0.3, grid.spacing, mask, impl),
        "bmo_aligned": lambda impl: [
            _kernels.box_mean_oscillation(f, s, None, impl) for s in sides],
        "bmo_shifted": lambda impl: [
            _kernels.box_mean_oscillation(f, s, (1, 1, 1), impl) for s in sides[1:3]],
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = {"python": _pykernels}
    if _ckernels is not None:
        impls["cython"] = _ckernels
    print(f"grid {args.n}^3, best of {args.repeat}")
    print(f"{'kernel':26s}" + "".join(f"{k:>12s}" for k in impls) + f"{'speedup':>10s}")
    for name, fn in cases(args.n).items():
        best = {k: min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
                for k, impl in impls.items()}
        speed = best["python"] / best["cython"] if "cython" in best else float("nan")
        print(f"{name:26s}" + "".join(f"{best[k] * 1e3:10.2f}ms" for k in impls)
              + f"{speed:9.1f}x")


if __name__ == "__main__":
    main()
