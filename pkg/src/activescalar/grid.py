"""Periodic grids, real <-> spectral transforms and spectral multipliers.

Fields on a ``Grid`` are plain numpy arrays:

* physical fields have shape ``grid.shape`` (row-major, last axis fastest);
* spectral fields use the real-to-complex half layout of ``numpy.fft.rfftn``,
  shape ``grid.spectral_shape``, normalised so that a constant field ``c``
  has ``coeff(0) == c``.

Wavenumbers along each axis are the integers ``-N/2+1 .. N/2``; the Nyquist
index carries ``+N/2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the 2*pi-periodic d-torus."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(dims)}")
        for n in dims:
            if n < 8 or n % 2:
                raise ValueError(f"mode counts must be even and >= 8, got {dims}")

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.dims

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.dims[:-1] + (self.dims[-1] // 2 + 1,)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @cached_property
    def spacing(self) -> np.ndarray:
        return TWO_PI / np.asarray(self.dims, dtype=float)

    @property
    def h_min(self) -> float:
        return float(self.spacing.min())

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return TWO_PI**self.d

    def axis_wavenumbers(self, axis: int) -> np.ndarray:
        """Integer wavenumbers of one axis in FFT order, Nyquist as +N/2."""
        n = self.dims[axis]
        k = np.fft.fftfreq(n, 1.0 / n).round().astype(np.int64)
        k[n // 2] = n // 2
        return k

    @cached_property
    def k_full(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays for the full (complex FFT) layout."""
        out = []
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.dims[ax]
            out.append(self.axis_wavenumbers(ax).astype(float).reshape(shape))
        return tuple(out)

    @cached_property
    def k_half(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays for the rfft half layout."""
        out = []
        for ax in range(self.d):
            shape = [1] * self.d
            if ax == self.d - 1:
                k = np.arange(self.dims[ax] // 2 + 1, dtype=float)
            else:
                k = self.axis_wavenumbers(ax).astype(float)
            shape[ax] = k.size
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def ksq_half(self) -> np.ndarray:
        return sum(k**2 for k in self.k_half) * np.ones(self.spectral_shape)

    @cached_property
    def kmag_half(self) -> np.ndarray:
        return np.sqrt(self.ksq_half)

    @cached_property
    def nyquist_half(self) -> tuple[np.ndarray, ...]:
        """Per-axis boolean masks (broadcastable) of the Nyquist index."""
        return tuple(np.abs(k) == n // 2 for k, n in zip(self.k_half, self.dims))

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each half-layout coefficient in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.ones(self.spectral_shape, dtype=bool)
        for k, n in zip(self.k_half, self.dims):
            keep &= np.abs(k) <= n / 3.0
        return keep

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Grid point coordinates x_i = i * h, as ``ij``-indexed meshgrid arrays."""
        axes = [np.arange(n) * h for n, h in zip(self.dims, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij"))


def _check_physical(grid: Grid, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    return f


def _check_spectral(grid: Grid, fh: np.ndarray) -> np.ndarray:
    fh = np.asarray(fh)
    if fh.shape != grid.spectral_shape:
        raise ValueError(
            f"spectral shape {fh.shape} does not match grid {grid.spectral_shape}"
        )
    return fh


def forward(grid: Grid, f: np.ndarray) -> np.ndarray:
    f = _check_physical(grid, f)
    if not np.all(np.isfinite(f)):
        raise ValueError("forward transform of a non-finite field")
    return np.fft.rfftn(f) / grid.size


def inverse(grid: Grid, fh: np.ndarray) -> np.ndarray:
    fh = _check_spectral(grid, fh)
    return np.fft.irfftn(fh * grid.size, s=grid.shape, axes=tuple(range(grid.d)))


def full_spectrum(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Full complex coefficient array (FFT index order) of a physical field."""
    return np.fft.fftn(_check_physical(grid, f)) / grid.size


def hermitian_defect(grid: Grid, coeffs: np.ndarray) -> float:
    """Relative max |c(-k) - conj(c(k))| of a full-layout coefficient array."""
    neg = coeffs
    for ax in range(grid.d):
        neg = np.roll(np.flip(neg, axis=ax), 1, axis=ax)
    scale = max(float(np.abs(coeffs).max()), np.finfo(float).tiny)
    return float(np.abs(neg - np.conj(coeffs)).max() / scale)


def l2_norm_sq(grid: Grid, f: np.ndarray) -> float:
    """Squared L2 norm over the torus, by midpoint quadrature."""
    return float(np.sum(np.square(f)) * grid.cell_volume)


def spectral_l2_norm_sq(grid: Grid, fh: np.ndarray) -> float:
    """Squared L2 norm from half-layout coefficients (Parseval)."""
    fh = _check_spectral(grid, fh)
    return float(grid.volume * np.sum(grid.parseval_weights * np.abs(fh) ** 2))


def spectral_inner(grid: Grid, ah: np.ndarray, bh: np.ndarray) -> float:
    """Real L2 inner product of two real fields given in half layout."""
    return float(grid.volume * np.sum(grid.parseval_weights * (ah * np.conj(bh)).real))


def derivative_multiplier(grid: Grid, axis: int) -> np.ndarray:
    # odd multiplier: the self-conjugate Nyquist index is dropped
    k = np.where(grid.nyquist_half[axis], 0.0, grid.k_half[axis])
    return 1j * k


def gradient(grid: Grid, fh: np.ndarray) -> list[np.ndarray]:
    fh = _check_spectral(grid, fh)
    return [derivative_multiplier(grid, ax) * fh for ax in range(grid.d)]


def laplacian(grid: Grid, fh: np.ndarray) -> np.ndarray:
    return -grid.ksq_half * _check_spectral(grid, fh)


def dealias(grid: Grid, fh: np.ndarray) -> np.ndarray:
    """Two-thirds rule: zero every mode with some |k_i| > N_i/3."""
    return np.where(grid.dealias_mask, _check_spectral(grid, fh), 0.0)


def project_zero_vertical_mean(grid: Grid, fh: np.ndarray) -> np.ndarray:
    """Remove the k_3 = 0 plane (zero x_3-average)."""
    if grid.d != 3:
        raise ValueError("vertical-mean projection needs a 3-D grid")
    out = np.array(_check_spectral(grid, fh), copy=True)
    out[..., 0] = 0.0
    return out


def truncate_plus(f: np.ndarray, h: float) -> np.ndarray:
    """Pointwise ``max(f - h, 0)``."""
    return np.maximum(np.asarray(f, dtype=float) - h, 0.0)


def fd_gradient_sq(grid: Grid, f: np.ndarray) -> np.ndarray:
    """|grad f|^2 from periodic second-order central differences."""
    f = _check_physical(grid, f)
    out = np.zeros_like(f)
    for ax, h in enumerate(grid.spacing):
        df = (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2.0 * h)
        out += df * df
    return out
