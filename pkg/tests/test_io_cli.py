import csv
import json
import struct

import numpy as np
import pytest

from activescalar.cli import main
from activescalar.config import ConfigError, from_dict, validate
from activescalar.grid import Grid
from activescalar.io import (
    FormatError,
    read_series,
    read_snapshot,
    read_symbol,
    write_snapshot,
    write_symbol,
)
from activescalar.operators import MgParams, mg_symbol, perp_riesz_symbol

MINIMAL = {
    "grid": {"d": 3, "dims": [16, 16, 16]},
    "operator": {"mg": {"omega": 0.5, "beta2_over_eta": 1.0}},
    "solver": {"kappa": 1.0, "cfl": 0.5, "t_final": 0.2},
    "initial": {"random_bandlimited": {"k_min": 1, "k_max": 3, "amplitude": 1.0, "seed": 7}},
    "output": {"snapshot_interval": 0.05},
}


def with_changes(**sections):
    raw = json.loads(json.dumps(MINIMAL))
    raw.update(sections)
    return raw


def write_config(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


# ------------------------------------------------------------ snapshots


@pytest.mark.parametrize("shape", [(8, 12), (8, 8, 16)])
def test_snapshot_round_trip(tmp_path, rng, shape):
    f = rng.standard_normal(shape)
    p = tmp_path / "a.asf"
    write_snapshot(p, f, 0.125, kappa=0.3, epsilon=1e-3)
    snap = read_snapshot(p, expect_dims=shape)
    assert np.array_equal(snap.values, f)
    assert (snap.time, snap.kappa, snap.epsilon) == (0.125, 0.3, 1e-3)
    assert snap.grid == Grid(shape)


def test_snapshot_layout(tmp_path):
    f = np.arange(64, dtype=float).reshape(8, 8)
    p = tmp_path / "a.asf"
    write_snapshot(p, f, 2.0)
    buf = p.read_bytes()
    assert buf[:4] == b"ASF1"
    assert struct.unpack_from("<IIII", buf, 4) == (1, 2, 8, 8)
    assert struct.unpack_from("<ddd", buf, 20) == (2.0, 0.0, 0.0)
    # row-major, last axis fastest
    assert struct.unpack_from("<dd", buf, 44) == (0.0, 1.0)
    assert len(buf) == 44 + 8 * 64


def test_snapshot_rejections(tmp_path):
    p = tmp_path / "a.asf"
    write_snapshot(p, np.zeros((8, 8)), 0.0)
    buf = p.read_bytes()
    bad = tmp_path / "bad.asf"
    bad.write_bytes(b"XXXX" + buf[4:])
    with pytest.raises(FormatError, match="magic"):
        read_snapshot(bad)
    bad.write_bytes(buf[:-8])
    with pytest.raises(FormatError, match="truncated"):
        read_snapshot(bad)
    bad.write_bytes(buf[:10])
    with pytest.raises(FormatError, match="truncated"):
        read_snapshot(bad)
    with pytest.raises(FormatError, match="dims"):
        read_snapshot(p, expect_dims=(16, 16))
    with pytest.raises(ValueError):
        write_snapshot(p, np.full((8, 8), np.inf), 0.0)


def test_read_series_sorted_and_consistent(tmp_path):
    for i, t in enumerate((0.2, 0.0, 0.1)):
        write_snapshot(tmp_path / f"snap_{i:06d}.asf", np.full((8, 8), t), t)
    grid, times, fields, _, _ = read_series(tmp_path)
    assert list(times) == [0.0, 0.1, 0.2] and fields[2, 0, 0] == 0.2
    write_snapshot(tmp_path / "snap_000009.asf", np.zeros((16, 16)), 0.3)
    with pytest.raises(FormatError):
        read_series(tmp_path)
    with pytest.raises(FileNotFoundError):
        read_series(tmp_path / "missing")


# -------------------------------------------------------------- symbols


def test_symbol_round_trip(tmp_path):
    g = Grid((8, 8, 8))
    m = mg_symbol(MgParams(0.5, 1.0), g)
    p = tmp_path / "m.msy"
    write_symbol(p, m)
    back = read_symbol(p, g)
    assert np.array_equal(back.table, m.table) and back.kind == "custom"
    assert p.read_bytes()[:4] == b"MSY1"
    with pytest.raises(FormatError):
        read_symbol(p, Grid((16, 16, 16)))


def test_symbol_rejects_non_divergence_free(tmp_path):
    g = Grid((8, 8))
    m = perp_riesz_symbol(1, g)
    k1, k2 = g.k_full
    object.__setattr__(m, "table", np.stack([k1 + 0 * k2, k2 + 0 * k1]).astype(complex))
    p = tmp_path / "bad.msy"
    write_symbol(p, m)
    with pytest.raises(ValueError, match="divergence"):
        read_symbol(p)


# --------------------------------------------------------------- config


def test_minimal_config_valid():
    assert validate(MINIMAL) == []
    cfg = from_dict(MINIMAL)
    assert cfg.solver["project_vertical"] is True
    assert cfg.diagnostics.checks == ("energy",)


def test_config_names_offending_field():
    raw = with_changes(operator={"mg": {"omega": -1, "beta2_over_eta": 1.0}})
    errors = validate(raw)
    assert len(errors) == 1 and errors[0].startswith("operator.mg.omega")


def test_config_dimension_mismatch():
    raw = with_changes(operator={"perp_riesz": {"axis": 1}})
    assert any("dimension mismatch" in e for e in validate(raw))


def test_config_collects_all_errors():
    raw = with_changes(grid={"d": 3, "dims": [16, 15, 16]},
                       solver={"kappa": -1, "t_final": 1.0, "dt": 0.1, "cfl": 0.5})
    raw["bogus"] = 1
    with pytest.raises(ConfigError) as info:
        from_dict(raw)
    joined = "\n".join(info.value.errors)
    for path in ("grid.dims.1", "solver.kappa", "bogus", "exactly one of dt / cfl"):
        assert path in joined
    assert len(info.value.errors) >= 4


# ------------------------------------------------------------------ CLI


def test_cli_run_then_diagnose(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    out = tmp_path / "run"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "timeseries.csv")))
    assert len(rows) > 2
    assert len(list(out.glob("snap_*.asf"))) == 5
    report = tmp_path / "diag.json"
    assert main(["diagnose", "--snapshots", str(out), "--config", cfg,
                 "--out", str(report), "--checks", "energy,levelset"]) == 0
    data = json.loads(report.read_text())
    assert data["energy"]["all_satisfied"] and data["levelset"]["all_satisfied"]
    assert main(["diagnose", "--snapshots", str(out), "--config", cfg,
                 "--out", str(report), "--checks", "nope"]) == 2


def test_cli_symbols(tmp_path):
    cfg = write_config(tmp_path, MINIMAL)
    out = tmp_path / "sym.csv"
    assert main(["symbols", "--config", cfg, "--out", str(out)]) == 0
    rows = {r["record"]: r for r in csv.DictReader(open(out)) if r["record"] != "curved_region"}
    assert float(rows["divergence_max"]["value"]) <= 1e-12
    assert float(rows["reality_defect"]["value"]) <= 1e-12
    curved = [r for r in csv.DictReader(open(out)) if r["record"] == "curved_region"]
    assert [int(r["k1"]) for r in curved] == [100, 200, 400]


def test_cli_epsilon_study(tmp_path):
    raw = with_changes(grid={"d": 2, "dims": [16, 16]}, operator={"perp_riesz": {"axis": 1}},
                       solver={"kappa": 0.5, "dt": 0.02, "t_final": 0.2})
    cfg = write_config(tmp_path, raw)
    out = tmp_path / "eps.csv"
    assert main(["epsilon-study", "--config", cfg, "--epsilons", "0.2,0.1,0.05,0.025",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    dist = [float(r["distance_to_next"]) for r in rows if r["distance_to_next"]]
    assert len(dist) == 3 and dist == sorted(dist, reverse=True)
    assert all(r["energy_bound_ok"] == "1" for r in rows)
    assert main(["epsilon-study", "--config", cfg, "--epsilons", "0.1,x",
                 "--out", str(out)]) == 2


def test_cli_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path, with_changes(operator={"mg": {"omega": -1,
                                                               "beta2_over_eta": 1}}))
    assert main(["run", "--config", bad, "--out", str(tmp_path / "x")]) == 2
    assert "operator.mg.omega" in capsys.readouterr().err
    unstable = with_changes(
        solver={"kappa": 0.0, "dt": 0.5, "t_final": 5.0},
        initial={"random_bandlimited": {"k_min": 1, "k_max": 5, "amplitude": 200.0, "seed": 5}},
    )
    assert main(["run", "--config", write_config(tmp_path, unstable, "u.json"),
                 "--out", str(tmp_path / "u")]) == 3
    good = write_config(tmp_path, MINIMAL, "g.json")
    assert main(["diagnose", "--snapshots", str(tmp_path / "missing"), "--config", good,
                 "--out", str(tmp_path / "r.json")]) == 4
    assert main(["run", "--config", str(tmp_path / "absent.json"),
                 "--out", str(tmp_path / "y")]) == 4
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["run", "--config", str(broken), "--out", str(tmp_path / "z")]) == 2
