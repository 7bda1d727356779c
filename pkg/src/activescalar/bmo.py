"""Dyadic BMO estimates of periodic fields."""
from __future__ import annotations

import numpy as np

from . import _kernels


def dyadic_sides(dims, min_cells: int = 4):
    """Box sides (in cells) N/2^j per axis, from the full period down to min_cells."""
    sides = []
    level = 0
    while True:
        div = 2**level
        if any(n % div for n in dims):
            break
        side = tuple(n // div for n in dims)
        if min(side) < min_cells:
            break
        sides.append(side)
        level += 1
    return sides


def bmo_norm(f: np.ndarray, min_cells: int = 4, shifted: bool = False) -> float:
    """max over dyadic cubes Q of (1/|Q|) int_Q |f - mean_Q f|.

    With ``shifted=False`` the cubes are the aligned dyadic cubes of the grid;
    with ``shifted=True`` every periodic grid offset is used at each dyadic
    size, which makes the estimate invariant under grid translations at the
    cost of N^d times more work.
    """
    if min_cells < 1:
        raise ValueError(f"min_cells must be >= 1, got {min_cells}")
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("bmo_norm of a non-finite field")
    # bmo is shift invariant; removing a sample value keeps constants exactly zero
    f = f - f.flat[0]
    best = 0.0
    for side in dyadic_sides(f.shape, min_cells):
        if all(s == n for s, n in zip(side, f.shape)):
            strides = side  # the full-period cube is the same at every offset
        else:
            strides = (1,) * f.ndim if shifted else side
        best = max(best, _kernels.box_mean_oscillation(f, side, strides))
    return best
