"""De Giorgi diagnostics on snapshot series of a drift-diffusion run.

Every check works on a ``SnapshotSeries`` (physical fields at increasing
times). Time integrals use the piecewise-linear interpolant of per-snapshot
scalars (trapezoid rule), gradients of truncated fields use periodic
second-order central differences, and level-set measures are cell counts.
Balls are periodic (minimum-image distance) with radius at most pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .bmo import bmo_norm
from .grid import Grid, forward, inverse, l2_norm_sq
from .operators import TijSymbol

ENERGY_TOL = 1e-6
FLAT_OSC = 1e-12


class CoverageError(ValueError):
    """The snapshot series does not cover the requested time window."""


@dataclass
class SnapshotSeries:
    grid: Grid
    times: np.ndarray
    fields: np.ndarray
    kappa: float = 1.0
    epsilon: float = 0.0
    operator: str = "unknown"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.fields = np.asarray(self.fields, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("a snapshot series needs at least two snapshots")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if self.fields.shape != (self.times.size,) + self.grid.shape:
            raise ValueError(
                f"fields shape {self.fields.shape} does not match "
                f"{self.times.size} snapshots on grid {self.grid.shape}"
            )

    @classmethod
    def from_snapshots(cls, grid, snapshots, **meta):
        """Build from an iterable of ``(time, field)`` pairs."""
        snaps = sorted(snapshots, key=lambda p: p[0])
        return cls(grid, [t for t, _ in snaps], np.stack([f for _, f in snaps]), **meta)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def field_at(self, t: float) -> np.ndarray:
        """Linear interpolation in time between neighbouring snapshots."""
        self.require(t, t)
        i = int(np.searchsorted(self.times, t))
        if i < self.times.size and abs(self.times[i] - t) <= 1e-12 * max(1.0, abs(t)):
            return self.fields[i]
        t0, t1 = self.times[i - 1], self.times[i]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.fields[i - 1] + w * self.fields[i]

    def require(self, a: float, b: float) -> None:
        eps = 1e-12 * max(1.0, abs(self.t_end))
        if a < self.t_start - eps or b > self.t_end + eps:
            raise CoverageError(
                f"window [{a:.6g}, {b:.6g}] outside snapshot range "
                f"[{self.t_start:.6g}, {self.t_end:.6g}]"
            )

    def indices_in(self, a: float, b: float) -> np.ndarray:
        eps = 1e-12 * max(1.0, abs(self.t_end))
        return np.nonzero((self.times >= a - eps) & (self.times <= b + eps))[0]

    def initial_norm_sq(self) -> float:
        return l2_norm_sq(self.grid, self.fields[0])


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    empirical_constant: float
    tol: float = 0.0
    degenerate: bool = False
    applicable: bool = True
    context: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q_r(t0, x0) = [t0 - r^2, t0] x B_r(x0); x0 is a grid index."""

    t0: float
    x0: tuple
    r: float

    def __post_init__(self):
        if not 0 < self.r <= math.pi:
            raise ValueError(f"cylinder radius must lie in (0, pi], got {self.r}")
        object.__setattr__(self, "x0", tuple(int(i) for i in self.x0))

    @property
    def t_start(self) -> float:
        return self.t0 - self.r**2


@dataclass(frozen=True)
class DeGiorgiConstants:
    d: int
    kappa0: float
    n0: int
    delta0: float
    C0: float


@dataclass
class OscillationTrace:
    center: tuple
    radii: list
    osc: list
    gamma_ratios: list
    alpha_fit: float
    fit_residual: float
    flat: bool = False


# ---------------------------------------------------------------- helpers


def _pl_values(times, values, a, b):
    """Sample points of the piecewise-linear interpolant restricted to [a, b]."""
    inner = (times > a) & (times < b)
    ts = np.concatenate(([a], times[inner], [b]))
    vs = np.interp(ts, times, values)
    return ts, vs


def _pl_integral(times, values, a, b) -> float:
    if b <= a:
        return 0.0
    ts, vs = _pl_values(times, values, a, b)
    return float(np.trapezoid(vs, ts))


def _pl_sup(times, values, a, b) -> float:
    ts, vs = _pl_values(times, values, a, b)
    return float(vs.max())


def _quadrature_slack(times, values, a, b) -> float:
    """Richardson estimate of the trapezoid error, |I_h - I_2h| / 3."""
    ts, vs = _pl_values(times, values, a, b)
    if ts.size < 5:
        return 0.0
    fine = float(np.trapezoid(vs, ts))
    coarse_t = ts[::2] if ts.size % 2 else np.append(ts[:-1:2], ts[-1])
    coarse_v = np.interp(coarse_t, ts, vs)
    return abs(fine - float(np.trapezoid(coarse_v, coarse_t))) / 3.0


@lru_cache(maxsize=256)
def _ball_mask_cached(grid: Grid, x0: tuple, r: float) -> np.ndarray:
    dist_sq = np.zeros(grid.shape)
    for ax, (n, h) in enumerate(zip(grid.dims, grid.spacing)):
        shape = [1] * grid.d
        shape[ax] = n
        delta = (np.arange(n) - x0[ax]) % n
        dist = np.minimum(delta, n - delta) * h
        dist_sq = dist_sq + (dist**2).reshape(shape)
    mask = dist_sq < r * r
    mask.setflags(write=False)
    return mask


def ball_mask(grid: Grid, x0, r: float) -> np.ndarray:
    """Grid points strictly within periodic distance r of grid point x0."""
    if not 0 < r <= math.pi:
        raise ValueError(f"ball radius must lie in (0, pi], got {r}")
    return _ball_mask_cached(grid, tuple(int(i) for i in x0), float(r))


def _truncated_energies(s: SnapshotSeries, h: float, sign: int = 1, mask=None,
                        indices=None):
    """Per-snapshot int (th-h)_+^2 and int |grad_FD (th-h)_+|^2, th = sign*theta."""
    if indices is None:
        indices = range(s.times.size)
    vol = s.grid.cell_volume
    e, g = [], []
    for i in indices:
        f = s.fields[i] if sign > 0 else -s.fields[i]
        es, gs = _kernels.truncated_energy(f, h, s.grid.spacing, mask)
        e.append(es * vol)
        g.append(gs * vol)
    return np.asarray(e), np.asarray(g)


def _signed(s: SnapshotSeries, sign: int) -> np.ndarray:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    return s.fields if sign > 0 else -s.fields


# ------------------------------------------------------------ global checks


def level_set_energy_check(s: SnapshotSeries, h: float, t1: float, t2: float,
                           sign: int = 1) -> InequalityReport:
    """int (th(t2)-h)_+^2 + 2 kappa int_t1^t2 int |grad (th-h)_+|^2 <= int (th(t1)-h)_+^2.

    Satisfied when lhs <= rhs + tol, tol = 1e-6 ||theta_0||^2 + the
    Richardson estimate of the time-quadrature error of the dissipation term.
    """
    _signed(s, sign)
    if not t1 < t2:
        raise ValueError(f"need t1 < t2, got {t1}, {t2}")
    s.require(t1, t2)
    e, g = _truncated_energies(s, h, sign)
    e1 = float(np.interp(t1, s.times, e))
    e2 = float(np.interp(t2, s.times, e))
    diss = 2.0 * s.kappa * _pl_integral(s.times, g, t1, t2)
    slack = 2.0 * s.kappa * _quadrature_slack(s.times, g, t1, t2)
    lhs, rhs = e2 + diss, e1
    tol = ENERGY_TOL * s.initial_norm_sq() + slack
    degenerate = lhs == 0.0 and rhs == 0.0
    return InequalityReport(
        "level_set_energy", lhs, rhs, lhs <= rhs + tol,
        lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf),
        tol, degenerate,
        context={"h": h, "t1": t1, "t2": t2, "sign": sign, "kappa": s.kappa,
                 "dissipation": diss, "quadrature_slack": slack},
    )


def degiorgi_c0(s: SnapshotSeries, sign: int = 1) -> float:
    return degiorgi_sequence(s, t0=s.t_end, H=0.0, n_max=0, sign=sign)[0]


def degiorgi_level(s: SnapshotSeries, t0: float, C: float = 4.0, sign: int = 1) -> float:
    """H = C c_0^{1/2} / t0^{d/4}."""
    return C * math.sqrt(degiorgi_c0(s, sign)) / t0 ** (s.grid.d / 4.0)


def degiorgi_sequence(s: SnapshotSeries, t0: float, H: float, n_max: int,
                      sign: int = 1) -> list[float]:
    """c_n = sup_{t>=t_n} int (th-h_n)_+^2 + 2 kappa int_{t_n}^{T} int |grad (th-h_n)_+|^2.

    t_n = t0 - t0/2^n, h_n = H - H/2^n; the upper time limit T is the end of
    the series.
    """
    _signed(s, sign)
    if not 0 <= n_max <= 12:
        raise ValueError(f"n_max must lie in [0, 12], got {n_max}")
    if not 0 < t0 <= s.t_end:
        raise CoverageError(f"t0={t0} outside (0, {s.t_end}]")
    out = []
    for n in range(n_max + 1):
        t_n = t0 - t0 / 2**n
        h_n = H - H / 2**n
        if t_n < s.t_start - 1e-12:
            raise CoverageError(f"snapshots start after t_{n} = {t_n:.6g}")
        e, g = _truncated_energies(s, h_n, sign)
        sup_e = _pl_sup(s.times, e, t_n, s.t_end)
        out.append(sup_e + 2.0 * s.kappa * _pl_integral(s.times, g, t_n, s.t_end))
    return out


@dataclass
class LinfDecayReport:
    sup_ratio: float
    table: list  # (t, ||theta(t)||_inf, t^{d/4} ||theta||_inf / ||theta_0||_2)


def linf_decay_check(s: SnapshotSeries) -> LinfDecayReport:
    """sup_{t>0} t^{d/4} ||theta(t)||_inf / ||theta_0||_2 over the snapshots."""
    if s.t_start != 0.0:
        raise CoverageError("the first snapshot must be at t = 0")
    norm0 = math.sqrt(s.initial_norm_sq())
    if norm0 == 0:
        raise ValueError("zero initial data")
    table = []
    for t, f in zip(s.times[1:], s.fields[1:]):
        linf = float(np.abs(f).max())
        table.append((float(t), linf, t ** (s.grid.d / 4.0) * linf / norm0))
    return LinfDecayReport(max(r[2] for r in table), table)


# ------------------------------------------------------------- local checks


def local_energy_check(s: SnapshotSeries, ts: TijSymbol | None,
                       cyl_outer: ParabolicCylinder, shrink: float, h: float,
                       constant: float = 1.0, sign: int = 1) -> InequalityReport:
    """First local energy inequality on Q_r subset Q_R, r = shrink * R.

    lhs = sup_{Q_r times} int_{B_r} (th-h)_+^2 + int int_{Q_r} |grad (th-h)_+|^2
    rhs = C R/(R-r)^2 ||(th-h)_+||_{L2(Q_R)}^{2-2/(d+2)} ||(th-h)_+||_{Linf(Q_R)}^{2/(d+2)}
    with C = ``constant``; the empirical constant is lhs over the C = 1 value.
    """
    th = _signed(s, sign)
    if not 0 < shrink < 1:
        raise ValueError(f"shrink must lie in (0, 1), got {shrink}")
    R, t0, x0 = cyl_outer.r, cyl_outer.t0, cyl_outer.x0
    r = shrink * R
    s.require(cyl_outer.t_start, t0)
    idx_R = s.indices_in(cyl_outer.t_start, t0)
    if idx_R.size < 3:
        raise CoverageError(f"cylinder holds {idx_R.size} snapshots, need >= 3")
    mask_R = ball_mask(s.grid, x0, R)
    mask_r = ball_mask(s.grid, x0, r)
    d = s.grid.d

    e_r, g_r = _truncated_energies(s, h, sign, mask_r)
    e_R, _ = _truncated_energies(s, h, sign, mask_R)
    t_in = t0 - r**2
    lhs = _pl_sup(s.times, e_r, t_in, t0) + _pl_integral(s.times, g_r, t_in, t0)
    l2sq_R = _pl_integral(s.times, e_R, cyl_outer.t_start, t0)
    linf_R = max(float(np.maximum(th[i][mask_R] - h, 0.0).max()) for i in idx_R)
    factor = (R / (R - r) ** 2) * l2sq_R ** (1 - 1 / (d + 2)) * linf_R ** (2 / (d + 2))
    degenerate = lhs == 0.0 and factor == 0.0
    emp = lhs / factor if factor > 0 else (0.0 if lhs == 0 else math.inf)
    ctx = {"t0": t0, "x0": list(x0), "R": R, "r": r, "h": h, "sign": sign,
           "constant": constant, "l2sq_QR": l2sq_R, "linf_QR": linf_R}
    if ts is not None:
        ctx["bmo_V_max"] = _bmo_v_max(s, ts, int(idx_R[-1]))
    return InequalityReport("first_local_energy", lhs, constant * factor,
                            lhs <= constant * factor, emp, 0.0, degenerate, context=ctx)


def second_energy_check(s: SnapshotSeries, ts: TijSymbol | None, x0, r: float,
                        R: float, t1: float, t2: float, h: float,
                        constant: float = 1.0, sign: int = 1) -> InequalityReport:
    """||(th(t2)-h)_+||^2_{B_r} <= ||(th(t1)-h)_+||^2_{B_R} + C R^d (t2-t1)/(R-r)^2 ||(th-h)_+||^2_{Linf}.

    The sup norm is over (t1, t2) x B_R. The empirical constant is the
    smallest C that makes the inequality hold.
    """
    th = _signed(s, sign)
    if not 0 < r < R:
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    if not t1 < t2:
        raise ValueError(f"need t1 < t2, got {t1}, {t2}")
    s.require(t1, t2)
    mask_r, mask_R = ball_mask(s.grid, x0, r), ball_mask(s.grid, x0, R)
    vol = s.grid.cell_volume
    f1, f2 = s.field_at(t1), s.field_at(t2)
    if sign < 0:
        f1, f2 = -f1, -f2
    lhs = float(np.sum(np.maximum(f2[mask_r] - h, 0.0) ** 2)) * vol
    first = float(np.sum(np.maximum(f1[mask_R] - h, 0.0) ** 2)) * vol
    sup = max(float(np.maximum(f[mask_R] - h, 0.0).max()) for f in (f1, f2))
    for i in s.indices_in(t1, t2):
        sup = max(sup, float(np.maximum(th[i][mask_R] - h, 0.0).max()))
    growth = R**s.grid.d * (t2 - t1) / (R - r) ** 2 * sup**2
    excess = max(lhs - first, 0.0)
    emp = excess / growth if growth > 0 else (0.0 if excess == 0 else math.inf)
    rhs = first + constant * growth
    ctx = {"x0": [int(i) for i in x0], "r": r, "R": R, "t1": t1, "t2": t2, "h": h,
           "sign": sign, "constant": constant, "first_term": first, "growth_term": growth}
    if ts is not None:
        ctx["bmo_V_max"] = _bmo_v_max(s, ts, int(np.argmin(np.abs(s.times - t1))))
    return InequalityReport("second_energy", lhs, rhs, lhs <= rhs, emp, 0.0,
                            lhs == 0.0 and rhs == 0.0, context=ctx)


# ------------------------------------------------------------------- BMO


def drift_potentials(grid: Grid, ts: TijSymbol, theta: np.ndarray) -> np.ndarray:
    """V_ij = T_ij theta, shape (d, d, *grid.shape)."""
    th = forward(grid, theta)
    half = ts.half()
    d = grid.d
    out = np.empty((d, d) + grid.shape)
    for i in range(d):
        for j in range(d):
            out[i, j] = inverse(grid, half[i, j] * th)
    return out


def _bmo_v_max(s: SnapshotSeries, ts: TijSymbol, index: int, min_cells: int = 4) -> float:
    V = drift_potentials(s.grid, ts, s.fields[index])
    d = s.grid.d
    return max(bmo_norm(V[i, j], min_cells) for i in range(d) for j in range(d))


def bmo_drift_series(s: SnapshotSeries, ts: TijSymbol, min_cells: int = 4,
                     stride: int = 1) -> list[tuple]:
    """Rows (t, max_ij bmo(V_ij), ||theta||_inf, ratio) for every ``stride``-th snapshot."""
    if ts.grid != s.grid:
        raise ValueError("T_ij symbol and snapshots live on different grids")
    rows = []
    for i in range(0, s.times.size, stride):
        b = _bmo_v_max(s, ts, i, min_cells)
        linf = float(np.abs(s.fields[i]).max())
        rows.append((float(s.times[i]), b, linf, b / linf if linf > 0 else 0.0))
    return rows


# -------------------------------------------------------- level-set control


def degiorgi_constants(d: int, C0: float = 1.0) -> DeGiorgiConstants:
    """kappa0 = (4/5)^{1/d}; n0 least n >= 2 with 2^n/(2^n-2) <= sqrt(6/5);
    delta0 = (1-kappa0)^2 / (12 C0 kappa0^2)."""
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    if not C0 > 0:
        raise ValueError(f"C0 must be > 0, got {C0}")
    kappa0 = (4.0 / 5.0) ** (1.0 / d)
    n0 = 2
    while 2**n0 / (2**n0 - 2) > math.sqrt(6.0 / 5.0):
        n0 += 1
    delta0 = (1 - kappa0) ** 2 / (12 * C0 * kappa0**2)
    return DeGiorgiConstants(d, kappa0, n0, delta0, C0)


def level_set_shrink_check(s: SnapshotSeries, t1: float, x0, R: float,
                           C0: float = 1.0, sign: int = 1) -> InequalityReport:
    """Level-set growth control over the forward window [t1, t1 + delta0 R^2].

    Hypothesis: |{th(t1) >= h} n B_r| <= |B_r|/2 with r = kappa0 R.
    Conclusion: |{th(t2) >= H} n B_R| <= 7/8 |B_R| for t2 in [t1, t1 + delta0 r^2],
    h = (M+m)/2 and H = M - (M-m)/2^n0, M, m the extrema over the window x B_R.
    """
    _signed(s, sign)
    c = degiorgi_constants(s.grid.d, C0)
    r = c.kappa0 * R
    t_end = t1 + c.delta0 * R**2
    s.require(t1, t_end)
    mask_R, mask_r = ball_mask(s.grid, x0, R), ball_mask(s.grid, x0, r)

    def snap(t):
        f = s.field_at(t)
        return f if sign > 0 else -f

    window = [snap(t1), snap(t_end)] + [
        s.fields[i] * sign for i in s.indices_in(t1, t_end)
    ]
    M = max(float(f[mask_R].max()) for f in window)
    m = min(float(f[mask_R].min()) for f in window)
    ctx = {"t1": t1, "x0": [int(i) for i in x0], "R": R, "r": r, "M": M, "m": m,
           "kappa0": c.kappa0, "delta0": c.delta0, "n0": c.n0, "sign": sign}
    if M - m <= 1e-14 * max(1.0, abs(M)):
        return InequalityReport("level_set_shrink", 0.0, 7 / 8, True, 0.0,
                                degenerate=True, applicable=False, context=ctx)
    h = 0.5 * (M + m)
    H = M - (M - m) / 2**c.n0
    hyp = float(np.count_nonzero(window[0][mask_r] >= h)) / np.count_nonzero(mask_r)
    ctx.update(h=h, H=H, hypothesis_fraction=hyp)
    if hyp > 0.5:
        return InequalityReport("level_set_shrink", math.nan, 7 / 8, False, math.nan,
                                applicable=False, context=ctx)
    t2_end = t1 + c.delta0 * r**2
    later = [snap(t1), snap(t2_end)] + [
        s.fields[i] * sign for i in s.indices_in(t1, t2_end)
    ]
    frac_R = max(float(np.count_nonzero(f[mask_R] >= H)) / np.count_nonzero(mask_R)
                 for f in later)
    frac_r = max(float(np.count_nonzero(f[mask_r] >= H)) / np.count_nonzero(mask_r)
                 for f in later)
    ctx.update(conclusion_fraction_R=frac_R, conclusion_fraction_r=frac_r)
    return InequalityReport("level_set_shrink", frac_R, 7 / 8, frac_R <= 7 / 8,
                            frac_R, context=ctx)


# ----------------------------------------------------------- oscillation


def oscillation_trace(s: SnapshotSeries, center, r_max: float, levels: int,
                      ratio: float | None = None) -> OscillationTrace:
    """osc over backward cylinders Q_r(t0, x0), r = r_max * ratio^j.

    ``center`` is ``(t0, x0)``; t0 must be a snapshot time. The cylinder is
    the set of grid cells (snapshot times in [t0 - r^2, t0]) x B_r(x0), so the
    sets are nested and osc is nondecreasing in r. ``ratio`` defaults to
    kappa0 = (4/5)^{1/d}. The Hoelder exponent is the least-squares slope of
    log osc against log r over the non-flat levels.
    """
    if levels < 3:
        raise ValueError(f"oscillation trace needs >= 3 levels, got {levels}")
    t0, x0 = center
    ratio = ratio or degiorgi_constants(s.grid.d).kappa0
    if not np.any(np.abs(s.times - t0) <= 1e-12 * max(1.0, abs(t0))):
        raise CoverageError(f"t0={t0} is not a snapshot time")
    radii = [r_max * ratio**j for j in range(levels)]
    s.require(t0 - radii[0] ** 2, t0)
    osc = []
    for r in radii:
        mask = ball_mask(s.grid, x0, r)
        vals = s.fields[s.indices_in(t0 - r**2, t0)][:, mask]
        osc.append(float(vals.max() - vals.min()))
    if any(a < b for a, b in zip(osc, osc[1:])):
        raise RuntimeError(f"oscillation not monotone in r: {osc}")
    gammas = [b / a if a > 0 else math.nan for a, b in zip(osc, osc[1:])]
    alpha, resid = fit_holder(radii, osc)
    return OscillationTrace((float(t0), tuple(int(i) for i in x0)), radii, osc,
                            gammas, alpha, resid, flat=math.isnan(alpha))


def fit_holder(radii, osc) -> tuple[float, float]:
    """Slope and RMS residual of log osc vs log r, dropping flat levels."""
    pts = [(math.log(r), math.log(o)) for r, o in zip(radii, osc) if o >= FLAT_OSC]
    if len(pts) < 2:
        return math.nan, math.nan
    x, y = np.array(pts).T
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return float(slope), resid


def oscillation_envelope(s: SnapshotSeries, centers, r_max: float, levels: int,
                         ratio: float | None = None):
    """Traces at several centers plus the envelope max_center osc(r) and its fit.

    The envelope is a discrete modulus of continuity; its slope is the
    Hoelder exponent of the sample as a whole.
    """
    traces = [oscillation_trace(s, c, r_max, levels, ratio) for c in centers]
    radii = traces[0].radii
    env = [max(tr.osc[j] for tr in traces) for j in range(len(radii))]
    gammas = [b / a if a > 0 else math.nan for a, b in zip(env, env[1:])]
    alpha, resid = fit_holder(radii, env)
    envelope = OscillationTrace((math.nan, ()), radii, env, gammas, alpha, resid,
                                flat=math.isnan(alpha))
    return traces, envelope
