"""Pseudo-spectral time stepping for d_t theta + u.grad theta = kappa Lap theta - eps Lambda^3 theta + S.

The linear part L(k) = -kappa |k|^2 - eps |k|^3 is integrated exactly by an
integrating factor; the advection term is advanced with classical RK4
(Lawson's integrating-factor RK4).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .grid import (
    Grid,
    dealias,
    derivative_multiplier,
    forward,
    inverse,
    project_zero_vertical_mean,
    spectral_inner,
    spectral_l2_norm_sq,
)
from .operators import MultiplierSymbol

log = logging.getLogger(__name__)

U_FLOOR = 1e-8
GROWTH_ABORT = 10.0


class NumericalInstabilityError(RuntimeError):
    """Raised when a run produces non-finite values or runaway growth."""


@dataclass
class SolverConfig:
    t_final: float
    kappa: float = 1.0
    epsilon: float = 0.0
    dt: float | None = None
    cfl: float | None = None
    dealias: bool = True
    project_vertical: bool = False
    forcing: np.ndarray | None = None
    snapshot_interval: float | None = None

    def __post_init__(self):
        if (self.dt is None) == (self.cfl is None):
            raise ValueError("exactly one of dt and cfl must be given")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.cfl is not None and not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        if self.kappa < 0 or self.epsilon < 0:
            raise ValueError("kappa and epsilon must be >= 0")
        if self.snapshot_interval is not None and not self.snapshot_interval > 0:
            raise ValueError("snapshot_interval must be > 0")

    @property
    def inviscid(self) -> bool:
        return self.kappa == 0 and self.epsilon == 0

    @property
    def interval(self) -> float:
        return self.snapshot_interval or self.t_final


@dataclass
class SolverState:
    time: float
    theta_hat: np.ndarray
    step_count: int = 0
    # running time integrals of ||grad theta||^2, ||Lambda^{3/2} theta||^2 and
    # <S, theta>, advanced with the same RK4 quadrature as the state
    grad_integral: float = 0.0
    hyper_integral: float = 0.0
    forcing_work: float = 0.0


@dataclass
class RunLog:
    """Per-snapshot scalar time series of a run."""

    t: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    h1_seminorm: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    energy_residual: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    steps: int = 0

    COLUMNS = ("t", "L2", "H1_seminorm", "Linf", "energy_residual")

    def rows(self):
        return list(zip(self.t, self.l2, self.h1_seminorm, self.linf,
                        self.energy_residual))


@dataclass
class RunResult:
    state: SolverState
    log: RunLog


Sink = Callable[[float, np.ndarray], None]


def _linear_symbol(grid: Grid, cfg: SolverConfig) -> np.ndarray:
    return -cfg.kappa * grid.ksq_half - cfg.epsilon * grid.kmag_half**3


def _project(grid: Grid, cfg: SolverConfig, fh: np.ndarray) -> np.ndarray:
    if cfg.dealias:
        fh = dealias(grid, fh)
    else:
        # the Nyquist modes are removed on every path
        keep = np.ones(grid.spectral_shape, dtype=bool)
        for nyq in grid.nyquist_half:
            keep &= ~nyq
        fh = np.where(keep, fh, 0.0)
    if cfg.project_vertical:
        fh = project_zero_vertical_mean(grid, fh)
    return fh


def nonlinear_term(m: MultiplierSymbol, theta_hat: np.ndarray,
                   dealiased: bool = True) -> np.ndarray:
    """Spectral coefficients of -(u . grad theta), u = M[theta], mean removed."""
    grid = m.grid
    half = m.half()
    adv = np.zeros(grid.shape)
    for j in range(grid.d):
        u_j = inverse(grid, half[j] * theta_hat)
        dtheta_j = inverse(grid, derivative_multiplier(grid, j) * theta_hat)
        adv += u_j * dtheta_j
    out = -np.fft.rfftn(adv) / grid.size
    out.flat[0] = 0.0
    if dealiased:
        out = dealias(grid, out)
    return out


def _weighted_norm_sq(grid: Grid, weight: np.ndarray, theta_hat: np.ndarray) -> float:
    return float(grid.volume * np.sum(grid.parseval_weights * weight * np.abs(theta_hat) ** 2))


def dissipation_rate(grid: Grid, cfg: SolverConfig, theta_hat: np.ndarray) -> float:
    """kappa ||grad theta||^2 + eps ||Lambda^{3/2} theta||^2."""
    weight = cfg.kappa * grid.ksq_half + cfg.epsilon * grid.kmag_half**3
    return _weighted_norm_sq(grid, weight, theta_hat)


class Stepper:
    """Integrating-factor RK4 for one (grid, config, symbol) triple."""

    def __init__(self, cfg: SolverConfig, m: MultiplierSymbol):
        self.cfg = cfg
        self.m = m
        self.grid = m.grid
        self.lin = _linear_symbol(self.grid, cfg)
        self.forcing_hat = None
        if cfg.forcing is not None:
            self.forcing_hat = _project(self.grid, cfg, forward(self.grid, cfg.forcing))
        self._factors_dt = None

    def rhs(self, theta_hat: np.ndarray) -> np.ndarray:
        nl = nonlinear_term(self.m, theta_hat, dealiased=False)
        nl = _project(self.grid, self.cfg, nl)
        if self.forcing_hat is not None:
            nl = nl + self.forcing_hat
        return nl

    def _factors(self, dt: float):
        if self._factors_dt != dt:
            self._e_half = np.exp(0.5 * dt * self.lin)
            self._e_full = self._e_half * self._e_half
            self._factors_dt = dt
        return self._e_half, self._e_full

    def _source_work(self, theta_hat: np.ndarray) -> float:
        if self.forcing_hat is None:
            return 0.0
        return spectral_inner(self.grid, self.forcing_hat, theta_hat)

    def step(self, state: SolverState, dt: float) -> SolverState:
        e_half, e_full = self._factors(dt)
        th = state.theta_hat
        a = self.rhs(th)
        th_a = e_half * (th + 0.5 * dt * a)
        b = self.rhs(th_a)
        th_b = e_half * th + 0.5 * dt * b
        c = self.rhs(th_b)
        th_c = e_full * th + dt * e_half * c
        d = self.rhs(th_c)
        new = e_full * th + (dt / 6.0) * (e_full * a + 2.0 * e_half * (b + c) + d)
        new = _project(self.grid, self.cfg, new)

        if not np.all(np.isfinite(new)):
            raise NumericalInstabilityError(
                f"non-finite state at step {state.step_count + 1}, t={state.time + dt:.6g}"
            )
        stages = (th, th_a, th_b, th_c)

        def quad(rate):
            v = [rate(s) for s in stages]
            return (dt / 6.0) * (v[0] + 2.0 * v[1] + 2.0 * v[2] + v[3])

        grid = self.grid
        grad = quad(lambda s: _weighted_norm_sq(grid, grid.ksq_half, s))
        hyper = 0.0
        if self.cfg.epsilon > 0:
            hyper = quad(lambda s: _weighted_norm_sq(grid, grid.kmag_half**3, s))
        work = quad(self._source_work) if self.forcing_hat is not None else 0.0
        return SolverState(state.time + dt, new, state.step_count + 1,
                           state.grad_integral + grad, state.hyper_integral + hyper,
                           state.forcing_work + work)

    def cfl_dt(self, state: SolverState) -> float:
        speed_sq = np.zeros(self.grid.shape)
        for j in range(self.grid.d):
            speed_sq += inverse(self.grid, self.m.half()[j] * state.theta_hat) ** 2
        umax = math.sqrt(float(speed_sq.max()))
        dt = self.cfg.cfl * self.grid.h_min / max(umax, U_FLOOR)
        return min(dt, self.cfg.interval)


def step(state: SolverState, cfg: SolverConfig, m: MultiplierSymbol,
         dt: float | None = None) -> SolverState:
    """Advance one step of size ``dt`` (default: cfg.dt or the CFL step)."""
    stepper = Stepper(cfg, m)
    if dt is None:
        dt = cfg.dt if cfg.dt is not None else stepper.cfl_dt(state)
    return stepper.step(state, dt)


def cfl_dt(state: SolverState, cfg: SolverConfig, m: MultiplierSymbol) -> float:
    """cfl * h_min / max(max_x |u(x)|, 1e-8), capped at the snapshot interval."""
    if cfg.cfl is None:
        raise ValueError("cfl_dt needs a config with a Courant number")
    return Stepper(cfg, m).cfl_dt(state)


def _record(log: RunLog, grid: Grid, cfg: SolverConfig, state: SolverState,
            theta: np.ndarray, e0: float):
    l2sq = spectral_l2_norm_sq(grid, state.theta_hat)
    h1sq = float(grid.volume * np.sum(grid.parseval_weights * grid.ksq_half
                                      * np.abs(state.theta_hat) ** 2))
    log.t.append(state.time)
    log.l2.append(math.sqrt(l2sq))
    log.h1_seminorm.append(math.sqrt(h1sq))
    log.linf.append(float(np.abs(theta).max()))
    diss = cfg.kappa * state.grad_integral + cfg.epsilon * state.hyper_integral
    log.dissipation.append(diss)
    log.energy_residual.append(0.5 * l2sq - 0.5 * e0 + diss - state.forcing_work)


def prepare_initial(theta0: np.ndarray, cfg: SolverConfig, m: MultiplierSymbol) -> np.ndarray:
    """Transform and project the initial data as the run will see it."""
    return _project(m.grid, cfg, forward(m.grid, theta0))


def run(theta0: np.ndarray, cfg: SolverConfig, m: MultiplierSymbol,
        sink: Sink | None = None) -> RunResult:
    """Integrate from theta0 to cfg.t_final, delivering snapshots to ``sink``.

    Snapshots are emitted at t = 0, every ``cfg.snapshot_interval`` and at
    ``t_final``; time steps are shortened to land on those instants.
    """
    grid = m.grid
    if cfg.project_vertical and grid.d != 3:
        raise ValueError("project_vertical needs a 3-D grid")
    if cfg.inviscid:
        log.warning("kappa = epsilon = 0: inviscid run, no dissipation")
    stepper = Stepper(cfg, m)
    state = SolverState(0.0, prepare_initial(theta0, cfg, m))
    e0 = spectral_l2_norm_sq(grid, state.theta_hat)
    norm0 = math.sqrt(e0)
    log_ = RunLog()

    def emit(st: SolverState):
        theta = inverse(grid, st.theta_hat)
        _record(log_, grid, cfg, st, theta, e0)
        if sink is not None:
            sink(st.time, theta.copy())

    emit(state)
    interval = cfg.interval
    n_snap = max(1, int(round(cfg.t_final / interval)))
    snap_times = [min(i * interval, cfg.t_final) for i in range(1, n_snap + 1)]
    if snap_times[-1] < cfg.t_final * (1 - 1e-12):
        snap_times.append(cfg.t_final)
    snap_times[-1] = cfg.t_final
    for target in snap_times:
        while state.time < target - 1e-12 * max(1.0, target):
            dt = cfg.dt if cfg.dt is not None else stepper.cfl_dt(state)
            dt = min(dt, target - state.time)
            state = stepper.step(state, dt)
            if stepper.forcing_hat is None and norm0 > 0:
                norm = math.sqrt(spectral_l2_norm_sq(grid, state.theta_hat))
                if norm > GROWTH_ABORT * norm0:
                    raise NumericalInstabilityError(
                        f"L2 norm grew {norm / norm0:.3g}x by t={state.time:.6g}"
                    )
        state = replace(state, time=target)
        emit(state)
    log_.steps = state.step_count
    return RunResult(state, log_)


def mollify_initial_data(grid: Grid, theta0: np.ndarray, eps: float) -> np.ndarray:
    """Convolve with a Gaussian mollifier, multiplier exp(-(eps |k|)^2 / 2)."""
    if eps < 0:
        raise ValueError(f"mollifier width must be >= 0, got {eps}")
    if eps == 0:
        return np.array(theta0, dtype=float, copy=True)
    fh = forward(grid, theta0) * np.exp(-0.5 * (eps * grid.kmag_half) ** 2)
    return inverse(grid, fh)


@dataclass
class EpsilonRow:
    epsilon: float
    distance_to_next: float | None
    final_l2_sq: float
    gradient_integral: float
    energy_bound_lhs: float
    energy_bound_ok: bool


@dataclass
class EpsilonStudyReport:
    rows: list
    theta0_l2_sq: float
    bound_rhs: float
    distances_decreasing: bool
    bound_holds: bool


class _Collector:
    def __init__(self):
        self.times, self.fields = [], []

    def __call__(self, t, f):
        self.times.append(t)
        self.fields.append(f)


def epsilon_study(theta0: np.ndarray, cfg: SolverConfig, m: MultiplierSymbol,
                  eps_list) -> EpsilonStudyReport:
    """Run the eps-regularised problem from mollified data for each eps.

    Reports the discrete L2([0,T] x torus) distance between consecutive eps
    levels and checks ||theta^eps(T)||^2 + 2 kappa int ||grad theta^eps||^2
    <= ||theta0||^2 (1 + 1e-6).
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ValueError("epsilon study needs at least three levels")
    if any(e <= 0 for e in eps_list) or any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon levels must be positive and strictly decreasing")
    grid = m.grid
    theta0_hat = prepare_initial(theta0, cfg, m)
    e0 = spectral_l2_norm_sq(grid, theta0_hat)

    runs = []
    for eps in eps_list:
        sub = replace(cfg, epsilon=eps)
        data = mollify_initial_data(grid, inverse(grid, theta0_hat), eps)
        col = _Collector()
        res = run(data, sub, m, col)
        runs.append((eps, np.asarray(col.times), np.stack(col.fields), res,
                     res.state.grad_integral))

    rows = []
    bound_rhs = e0 * (1 + 1e-6)
    for i, (eps, times, fields, res, grad_int) in enumerate(runs):
        dist = None
        if i + 1 < len(runs):
            t2, f2 = runs[i + 1][1], runs[i + 1][2]
            if t2.shape != times.shape or np.max(np.abs(t2 - times)) > 1e-12:
                raise RuntimeError("epsilon runs produced different snapshot times")
            per_t = np.sum((fields - f2) ** 2, axis=tuple(range(1, fields.ndim))) * grid.cell_volume
            dist = math.sqrt(float(np.trapezoid(per_t, times)))
        final = res.log.l2[-1] ** 2
        lhs = final + 2.0 * cfg.kappa * grad_int
        rows.append(EpsilonRow(eps, dist, final, grad_int, lhs, lhs <= bound_rhs))
    dists = [r.distance_to_next for r in rows if r.distance_to_next is not None]
    return EpsilonStudyReport(
        rows, e0, bound_rhs,
        all(a > b for a, b in zip(dists, dists[1:])),
        all(r.energy_bound_ok for r in rows),
    )

