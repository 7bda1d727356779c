"""Command line: ``activescalar run | symbols | diagnose | epsilon-study``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure, 4 I/O failure. Failures print a one-line cause on stderr.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import CHECKS, ConfigError, build_initial, build_solver_config, build_symbol, parse_config
from .io import FormatError, SnapshotWriter, read_series, write_csv, write_json
from .operators import (
    curved_region_scan,
    measure_growth_constant,
    tij_from_symbol,
    tij_reconstruction_defect,
)
from .solver import NumericalInstabilityError, RunLog, epsilon_study, run

log = logging.getLogger("activescalar")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
TIMESERIES = "timeseries.csv"


# ------------------------------------------------------------------ run


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    m = build_symbol(cfg)
    scfg = build_solver_config(cfg)
    theta0 = build_initial(cfg)
    out = Path(args.out)
    writer = SnapshotWriter(out, scfg.kappa, scfg.epsilon)
    res = run(theta0, scfg, m, writer)
    write_csv(out / TIMESERIES, RunLog.COLUMNS, res.log.rows())
    log.info("%d steps, %d snapshots written to %s", res.log.steps, writer.count, out)
    return EXIT_OK


# -------------------------------------------------------------- symbols

SYMBOL_COLUMNS = ("record", "k1", "k2", "k3", "abs_M1", "abs_M2", "abs_M3", "value")


def symbol_rows(m, sigma=0.5, k1_list=(100, 200, 400)):
    ts = tij_from_symbol(m)
    rows = [
        ("divergence_max", "", "", "", "", "", "", float(m.divergence_defect().max())),
        ("reality_defect", "", "", "", "", "", "", m.reality_defect()),
        ("tij_reconstruction_defect", "", "", "", "", "", "", tij_reconstruction_defect(ts, m)),
        ("tij_sup", "", "", "", "", "", "", ts.sup_norm()),
        ("growth_constant", "", "", "", "", "", "", measure_growth_constant(m)),
    ]
    if m.kind == "mg":
        for k1, a1, a2, a3, ratio in curved_region_scan(m, sigma, k1_list):
            rows.append(("curved_region", k1, round(k1**sigma), 1, a1, a2, a3, ratio))
    return rows


def cmd_symbols(args) -> int:
    cfg = parse_config(args.config)
    m = build_symbol(cfg)
    write_csv(args.out, SYMBOL_COLUMNS, symbol_rows(m, args.sigma, args.k1))
    return EXIT_OK


# ------------------------------------------------------------- diagnose


def _report_summary(reports):
    applicable = [r for r in reports if r.applicable]
    return {
        "count": len(reports),
        "applicable": len(applicable),
        "all_satisfied": all(r.satisfied for r in applicable),
        "max_empirical_constant": max(
            (r.empirical_constant for r in applicable if not r.degenerate), default=0.0
        ),
        "reports": reports,
    }


def run_diagnostics(s: dg.SnapshotSeries, ts, dcfg, checks=None) -> dict:
    """Run the selected checks on a series; returns a JSON-ready dict."""
    checks = tuple(checks or dcfg.checks)
    rng = np.random.default_rng(dcfg.seed)
    g = s.grid
    lo, hi = float(s.fields.min()), float(s.fields.max())
    out = {"grid": list(g.dims), "kappa": s.kappa, "epsilon": s.epsilon,
           "snapshots": int(s.times.size), "t_range": [s.t_start, s.t_end]}
    t0 = dcfg.t0 or s.t_end
    R = min(dcfg.r_max, math.sqrt(max(t0 - s.t_start, 0.0)), math.pi)

    def centers(n):
        return [tuple(int(v) for v in rng.integers(0, g.dims)) for _ in range(n)]

    if "energy" in checks:
        h = lo - 1.0
        out["energy"] = _report_summary([dg.level_set_energy_check(s, h, s.t_start, s.t_end)])
    if "levelset" in checks:
        reps = []
        for h in np.linspace(lo, hi, dcfg.sample_count):
            i, j = sorted(rng.choice(s.times.size, 2, replace=False))
            reps.append(dg.level_set_energy_check(s, float(h), float(s.times[i]),
                                                  float(s.times[j])))
        out["levelset"] = _report_summary(reps)
    if "degiorgi" in checks:
        c0 = dg.degiorgi_c0(s)
        H = dcfg.H_constant * math.sqrt(c0) / t0 ** (g.d / 4.0)
        seq = dg.degiorgi_sequence(s, t0, H, dcfg.n_max)
        out["degiorgi"] = {
            "t0": t0, "H": H, "H_constant": dcfg.H_constant, "c": seq,
            "nonincreasing": all(a >= b for a, b in zip(seq, seq[1:])),
            "final_over_c0": seq[-1] / seq[0] if seq[0] > 0 else 0.0,
        }
    if "linf" in checks:
        rep = dg.linf_decay_check(s)
        out["linf"] = {"sup_ratio": rep.sup_ratio,
                       "table": [dict(zip(("t", "linf", "ratio"), r)) for r in rep.table]}
    if "local_energy" in checks:
        reps = []
        for x0 in centers(dcfg.sample_count):
            cyl = dg.ParabolicCylinder(t0, x0, R)
            vals = s.fields[s.indices_in(cyl.t_start, t0)][:, dg.ball_mask(g, x0, R)]
            reps.append(dg.local_energy_check(s, None, cyl, 0.5, float(np.median(vals))))
        out["local_energy"] = _report_summary(reps)
    if "second_energy" in checks:
        reps = []
        span = s.t_end - s.t_start
        for x0 in centers(dcfg.sample_count):
            t1 = s.t_start + rng.uniform(0.0, 0.75) * span
            h = float(rng.uniform(0.0, hi))
            reps.append(dg.second_energy_check(s, None, x0, 0.5 * R, R, t1, t1 + 0.25 * span, h))
        out["second_energy"] = _report_summary(reps)
    if "shrink" in checks:
        const = dg.degiorgi_constants(g.d, dcfg.C0)
        reps = []
        window = const.delta0 * R**2
        for x0 in centers(dcfg.sample_count):
            t1 = s.t_start + rng.uniform(0.0, 1.0) * (s.t_end - s.t_start - window)
            rep = dg.level_set_shrink_check(s, t1, x0, R, dcfg.C0)
            if not rep.applicable and not rep.degenerate:
                rep = dg.level_set_shrink_check(s, t1, x0, R, dcfg.C0, sign=-1)
            reps.append(rep)
        out["shrink"] = {"constants": const, **_report_summary(reps)}
    if "bmo" in checks:
        if ts is None:
            raise ValueError("bmo check needs the operator from the config")
        stride = max(1, s.times.size // 20)
        rows = dg.bmo_drift_series(s, ts, dcfg.min_cells, stride)
        out["bmo"] = {"max_ratio": max(r[3] for r in rows),
                      "table": [dict(zip(("t", "bmo_V_max", "linf", "ratio"), r)) for r in rows]}
    if "oscillation" in checks:
        t_osc = float(s.times[-1]) if dcfg.t0 is None else t0
        traces = [dg.oscillation_trace(s, (t_osc, x0), R, dcfg.levels)
                  for x0 in centers(dcfg.sample_count)]
        out["oscillation"] = {
            "traces": traces,
            "max_gamma": max(max(tr.gamma_ratios) for tr in traces),
            "alpha_range": [min(tr.alpha_fit for tr in traces),
                            max(tr.alpha_fit for tr in traces)],
        }
    return out


def cmd_diagnose(args) -> int:
    cfg = parse_config(args.config)
    grid, times, fields, kappa, epsilon = read_series(args.snapshots, cfg.grid.dims)
    m = build_symbol(cfg)
    s = dg.SnapshotSeries(grid, times, fields, kappa, epsilon, m.kind)
    checks = args.checks.split(",") if args.checks else None
    if checks:
        bad = [c for c in checks if c not in CHECKS]
        if bad:
            raise ConfigError([f"--checks: unknown check {c!r}" for c in bad])
    report = run_diagnostics(s, tij_from_symbol(m), cfg.diagnostics, checks)
    write_json(args.out, report)
    return EXIT_OK


# -------------------------------------------------------- epsilon study

EPSILON_COLUMNS = ("epsilon", "distance_to_next", "final_L2_sq", "gradient_integral",
                   "energy_bound_lhs", "energy_bound_rhs", "energy_bound_ok")


def cmd_epsilon_study(args) -> int:
    cfg = parse_config(args.config)
    try:
        eps = [float(e) for e in args.epsilons.split(",")]
    except ValueError as exc:
        raise ConfigError([f"--epsilons: {exc}"]) from exc
    m = build_symbol(cfg)
    rep = epsilon_study(build_initial(cfg), build_solver_config(cfg), m, eps)
    rows = [(r.epsilon, "" if r.distance_to_next is None else r.distance_to_next,
             r.final_l2_sq, r.gradient_integral, r.energy_bound_lhs, rep.bound_rhs,
             int(r.energy_bound_ok)) for r in rep.rows]
    write_csv(args.out, EPSILON_COLUMNS, rows)
    log.info("distances decreasing: %s, energy bound holds: %s",
             rep.distances_decreasing, rep.bound_holds)
    return EXIT_OK


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="activescalar", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a config and write snapshots + time series")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("symbols", help="symbol identities and curved-region scan (CSV)")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--sigma", type=float, default=0.5)
    s.add_argument("--k1", type=int, nargs="+", default=[100, 200, 400])
    s.set_defaults(func=cmd_symbols)

    d = sub.add_parser("diagnose", help="De Giorgi checks on a snapshot directory (JSON)")
    d.add_argument("--snapshots", required=True)
    d.add_argument("--config", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--checks", help="comma-separated subset overriding the config")
    d.set_defaults(func=cmd_diagnose)

    e = sub.add_parser("epsilon-study", help="vanishing-regularisation study (CSV)")
    e.add_argument("--config", required=True)
    e.add_argument("--epsilons", required=True, help="comma-separated, decreasing")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_epsilon_study)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalInstabilityError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, FormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
