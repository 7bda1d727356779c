"""Initial data: seeded band-limited random fields and explicit mode sums."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .grid import Grid, inverse, project_zero_vertical_mean


def band_modes(d: int, k_min: float, k_max: float) -> list[tuple[int, ...]]:
    """Integer wavevectors with k_min <= |k| <= k_max, one of each +-k pair.

    The representative has its first nonzero component positive; the list is
    in lexicographic order and does not depend on any grid.
    """
    kmax = int(math.floor(k_max))
    out = []
    for k in itertools.product(range(-kmax, kmax + 1), repeat=d):
        if not any(k):
            continue
        first = next(c for c in k if c != 0)
        if first < 0:
            continue
        mag = math.sqrt(sum(c * c for c in k))
        if k_min <= mag <= k_max:
            out.append(k)
    return out


def _place(grid: Grid, coeffs: np.ndarray, k: tuple[int, ...], value: complex) -> None:
    """Set coefficient of mode k (and of -k by conjugation) in half layout."""
    for kk, v in ((k, value), (tuple(-c for c in k), np.conj(value))):
        if kk[-1] < 0:
            continue
        idx = tuple(c % n for c, n in zip(kk[:-1], grid.dims[:-1])) + (kk[-1],)
        coeffs[idx] = v


def modes_field(grid: Grid, modes) -> np.ndarray:
    """Sum of ``amplitude * cos(k . x)`` over ``(k, amplitude)`` pairs."""
    out = np.zeros(grid.shape)
    for k, amp in modes:
        k = tuple(int(c) for c in k)
        if len(k) != grid.d:
            raise ValueError(f"mode {k} does not match grid dimension {grid.d}")
        if any(abs(c) >= n // 2 for c, n in zip(k, grid.dims)):
            raise ValueError(f"mode {k} is not resolved on grid {grid.dims}")
        out += single_mode(grid, k, amp)
    return out


def random_bandlimited(grid: Grid, k_min: float, k_max: float, amplitude: float,
                       seed: int, zero_vertical_mean: bool = False) -> np.ndarray:
    """Sum of modes in the band with unit-normal cosine/sine amplitudes.

    Amplitudes are drawn from a Philox (counter-based) generator keyed by
    ``seed``, in the grid-independent order of ``band_modes``, so the same
    seed gives the same continuous field on every grid that resolves the band.
    The field is scaled by ``amplitude / sqrt(number of modes)``.
    """
    modes = band_modes(grid.d, k_min, k_max)
    if not modes:
        raise ValueError(f"no modes with {k_min} <= |k| <= {k_max}")
    for k in modes:
        for c, n in zip(k, grid.dims):
            if abs(c) >= n // 2:
                raise ValueError(f"band k_max={k_max} not resolved on grid {grid.dims}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    draws = rng.standard_normal((len(modes), 2))
    scale = amplitude / math.sqrt(len(modes))
    coeffs = np.zeros(grid.spectral_shape, dtype=complex)
    for k, (a, b) in zip(modes, draws):
        # a cos(k.x) + b sin(k.x) has coefficient (a - i b)/2 at +k
        _place(grid, coeffs, k, scale * 0.5 * (a - 1j * b))
    if zero_vertical_mean:
        coeffs = project_zero_vertical_mean(grid, coeffs)
    return inverse(grid, coeffs)


def single_mode(grid: Grid, k, amplitude: float = 1.0) -> np.ndarray:
    x = grid.coordinates()
    return amplitude * np.cos(sum(kj * xj for kj, xj in zip(k, x)))

