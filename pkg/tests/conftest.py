import numpy as np
import pytest

from activescalar.diagnostics import SnapshotSeries
from activescalar.grid import Grid
from activescalar.initial import random_bandlimited
from activescalar.operators import MgParams, mg_symbol
from activescalar.solver import SolverConfig, run

MG = MgParams(omega=0.5, beta2_over_eta=1.0)

# criterion id -> list of (clause, ok, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def reference_run(n=32, t_final=1.0, interval=0.01, kappa=1.0):
    """The viscous MG reference run: band [1, 3], seed 7, CFL 0.25."""
    grid = Grid((n, n, n))
    m = mg_symbol(MG, grid)
    theta0 = random_bandlimited(grid, 1, 3, 1.0, seed=7, zero_vertical_mean=True)
    cfg = SolverConfig(t_final=t_final, kappa=kappa, cfl=0.25, project_vertical=True,
                       snapshot_interval=interval)
    snaps = []
    res = run(theta0, cfg, m, lambda t, f: snaps.append((t, f)))
    series = SnapshotSeries.from_snapshots(grid, snaps, kappa=kappa, operator="mg")
    return grid, m, theta0, cfg, res, series


@pytest.fixture(scope="session")
def mg_run():
    return reference_run()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[cid]
        ok = all(c[1] for c in clauses)
        detail = "; ".join(f"{name}: {d}{'' if good else ' [FAIL]'}" for name, good, d in clauses)
        tr.write_line(f"criterion {cid:2d} {'PASS' if ok else 'FAIL'}  {detail}")
