"""Fourier-multiplier velocity operators u = M[theta] and their T_ij symbols."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, inverse

DIV_TOL = 1e-12


@dataclass(frozen=True)
class MgParams:
    """Rotation rate and the magnetic ratio beta^2/eta of the MG model."""

    omega: float
    beta2_over_eta: float

    def __post_init__(self):
        for name in ("omega", "beta2_over_eta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")


@dataclass(frozen=True, eq=False)
class MultiplierSymbol:
    """Tabulated symbol k -> (M_1(k), ..., M_d(k)) on the full FFT layout.

    ``table`` has shape ``(d, *grid.dims)``; ``kind`` is ``"mg"``,
    ``"perp_riesz"``, ``"zero"`` or ``"custom"``.
    """

    grid: Grid
    table: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = (self.grid.d,) + self.grid.dims
        if self.table.shape != expected:
            raise ValueError(f"symbol table shape {self.table.shape} != {expected}")

    def half(self) -> np.ndarray:
        """Symbol restricted to the rfft half layout, shape (d, *spectral_shape)."""
        cached = self.__dict__.get("_half")
        if cached is None:
            n_last = self.grid.dims[-1] // 2 + 1
            cached = np.ascontiguousarray(self.table[..., :n_last])
            self.__dict__["_half"] = cached
        return cached

    def divergence_defect(self) -> np.ndarray:
        """|k . M(k)| / ((1 + |k|) max_j |M_j(k)|), zero where M vanishes."""
        k = self.grid.k_full
        kdotm = sum(k[j] * self.table[j] for j in range(self.grid.d))
        kmag = np.sqrt(sum(kj**2 for kj in k))
        mmax = np.abs(self.table).max(axis=0)
        scale = (1.0 + kmag) * mmax
        return np.where(scale > 0, np.abs(kdotm) / np.where(scale > 0, scale, 1.0), 0.0)

    def reality_defect(self) -> float:
        """max |M_j(-k) - conj(M_j(k))| relative to max |M|.

        Modes with a Nyquist component are skipped: -N/2 is not on the grid,
        so those modes have no partner (and dealiasing removes them).
        """
        neg = self.table
        for ax in range(1, self.grid.d + 1):
            neg = np.roll(np.flip(neg, axis=ax), 1, axis=ax)
        paired = np.ones(self.grid.dims, dtype=bool)
        for ax, n in enumerate(self.grid.dims):
            idx = [slice(None)] * self.grid.d
            idx[ax] = n // 2
            paired[tuple(idx)] = False
        scale = max(float(np.abs(self.table).max()), np.finfo(float).tiny)
        return float(np.abs(neg - np.conj(self.table))[:, paired].max() / scale)

    def validate(self, tol: float = DIV_TOL) -> None:
        """Reject symbols that are not divergence-free or not real-valued."""
        div = float(self.divergence_defect().max())
        if div > tol:
            raise ValueError(f"symbol is not divergence-free (defect {div:.3e})")
        real = self.reality_defect()
        if real > tol:
            raise ValueError(f"symbol violates M(-k) = conj M(k) (defect {real:.3e})")


@dataclass(frozen=True, eq=False)
class TijSymbol:
    """T_ij(k) = -(i k_i / |k|^2) M_j(k), table shape (d, d, *grid.dims)."""

    grid: Grid
    table: np.ndarray

    def half(self) -> np.ndarray:
        n_last = self.grid.dims[-1] // 2 + 1
        return self.table[..., :n_last]

    def sup_norm(self) -> float:
        return float(np.abs(self.table).max())


def mg_symbol_values(params: MgParams, k1, k2, k3):
    """MG symbols (M1, M2, M3) at wavenumbers with k3 != 0 (broadcasting)."""
    k1, k2, k3 = (np.asarray(k, dtype=float) for k in (k1, k2, k3))
    w2 = 2.0 * params.omega
    c = params.beta2_over_eta
    ksq = k1**2 + k2**2 + k3**2
    den = w2**2 * k3**2 * ksq + c**2 * k2**4
    m1 = (w2 * k2 * k3 * ksq - c * k1 * k2**2 * k3) / den
    m2 = (-w2 * k1 * k3 * ksq - c * k2**3 * k3) / den
    m3 = (c * k2**2 * (k1**2 + k2**2)) / den
    return m1, m2, m3


def mg_symbol(params: MgParams, grid: Grid) -> MultiplierSymbol:
    """Tabulate the MG operator; on k3 = 0, M1 = M2 = 0 and M3(k1,k2,0) = M3(k1,k2,1)."""
    if grid.d != 3:
        raise ValueError("the MG operator is defined on 3-D grids only")
    k1, k2, k3 = (np.broadcast_to(k, grid.dims) for k in grid.k_full)
    k3_eval = np.where(k3 == 0, 1.0, k3)
    m1, m2, m3 = mg_symbol_values(params, k1, k2, k3_eval)
    plane = k3 == 0
    m1 = np.where(plane, 0.0, m1)
    m2 = np.where(plane, 0.0, m2)
    table = np.stack([m1, m2, m3]).astype(complex)
    return MultiplierSymbol(
        grid, table, "mg",
        {"omega": params.omega, "beta2_over_eta": params.beta2_over_eta},
    )


def perp_riesz_symbol(axis: int, grid: Grid) -> MultiplierSymbol:
    """u = grad^perp R_axis theta in 2-D, with R_axis the Riesz transform."""
    if grid.d != 2:
        raise ValueError("the perp-Riesz operator is defined on 2-D grids only")
    if axis not in (1, 2):
        raise ValueError(f"Riesz axis must be 1 or 2, got {axis}")
    k1, k2 = (np.broadcast_to(k, grid.dims) for k in grid.k_full)
    kmag = np.sqrt(k1**2 + k2**2)
    ka = (k1, k2)[axis - 1]
    riesz = np.where(kmag > 0, 1j * ka / np.where(kmag > 0, kmag, 1.0), 0.0)
    table = np.stack([-1j * k2 * riesz, 1j * k1 * riesz])
    return MultiplierSymbol(grid, table, "perp_riesz", {"axis": axis})


def zero_symbol(grid: Grid) -> MultiplierSymbol:
    return MultiplierSymbol(grid, np.zeros((grid.d,) + grid.dims, complex), "zero")


def custom_symbol(grid: Grid, table: np.ndarray) -> MultiplierSymbol:
    """Wrap a user table; raises ValueError unless divergence-free and real."""
    sym = MultiplierSymbol(grid, np.asarray(table, dtype=complex), "custom")
    sym.validate()
    return sym


def tij_from_symbol(m: MultiplierSymbol) -> TijSymbol:
    k = m.grid.k_full
    ksq = sum(kj**2 for kj in k)
    inv = np.where(ksq > 0, 1.0 / np.where(ksq > 0, ksq, 1.0), 0.0)
    d = m.grid.d
    table = np.empty((d, d) + m.grid.dims, dtype=complex)
    for i in range(d):
        for j in range(d):
            table[i, j] = -1j * k[i] * inv * m.table[j]
    return TijSymbol(m.grid, table)


def tij_reconstruction_defect(ts: TijSymbol, m: MultiplierSymbol) -> float:
    """max_k |sum_i (i k_i) T_ij(k) - M_j(k)| / max|M| over k != 0."""
    k = m.grid.k_full
    ksq = sum(kj**2 for kj in k)
    worst = 0.0
    for j in range(m.grid.d):
        rec = sum(1j * k[i] * ts.table[i, j] for i in range(m.grid.d))
        worst = max(worst, float(np.abs(np.where(ksq > 0, rec - m.table[j], 0.0)).max()))
    return worst / max(float(np.abs(m.table).max()), np.finfo(float).tiny)


def apply_velocity(m: MultiplierSymbol, theta_hat: np.ndarray) -> list[np.ndarray]:
    """Spectral velocity components u_j(k) = M_j(k) theta(k) (half layout)."""
    if theta_hat.shape != m.grid.spectral_shape:
        raise ValueError("theta_hat does not live on the symbol's grid")
    half = m.half()
    return [half[j] * theta_hat for j in range(m.grid.d)]


def velocity_field(m: MultiplierSymbol, theta_hat: np.ndarray) -> list[np.ndarray]:
    """Physical-space velocity components."""
    return [inverse(m.grid, uh) for uh in apply_velocity(m, theta_hat)]


def measure_growth_constant(m: MultiplierSymbol) -> float:
    """sup over grid modes k != 0 of max_j |M_j(k)| / |k|."""
    kmag = np.sqrt(sum(kj**2 for kj in m.grid.k_full))
    ratio = np.abs(m.table).max(axis=0) / np.where(kmag > 0, kmag, np.inf)
    return float(ratio.max())


def curved_region_scan(m: MultiplierSymbol, sigma: float, k1_list) -> list[tuple]:
    """Evaluate the MG symbols along k = (k1, round(k1**sigma), 1).

    Rows are ``(k1, |M1|, |M2|, |M3|, |M2|/k1)``. The symbol formulas are
    evaluated directly, so k1 may exceed the grid's band.
    """
    if m.kind != "mg":
        raise ValueError("curved-region scan applies to the MG operator only")
    if not 0.0 < sigma <= 0.5:
        raise ValueError(f"sigma must lie in (0, 1/2], got {sigma}")
    params = MgParams(m.params["omega"], m.params["beta2_over_eta"])
    rows = []
    for k1 in k1_list:
        if k1 < 4:
            raise ValueError(f"curved-region scan needs k1 >= 4, got {k1}")
        k2 = round(k1**sigma)
        m1, m2, m3 = mg_symbol_values(params, k1, k2, 1)
        rows.append((int(k1), abs(float(m1)), abs(float(m2)), abs(float(m3)),
                     abs(float(m2)) / k1))
    return rows
