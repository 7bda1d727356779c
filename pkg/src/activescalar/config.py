"""JSON run configuration: schema validation and construction of run objects.

A config looks like::

    {
      "grid": {"d": 3, "dims": [32, 32, 32]},
      "operator": {"mg": {"omega": 0.5, "beta2_over_eta": 1.0}},
      "solver": {"kappa": 1.0, "cfl": 0.25, "t_final": 1.0},
      "initial": {"random_bandlimited": {"k_min": 1, "k_max": 3,
                                         "amplitude": 1.0, "seed": 7}},
      "diagnostics": {"checks": ["energy"]},
      "output": {"dir": "out", "snapshot_interval": 0.01}
    }

``operator`` is one of ``mg``, ``perp_riesz`` (``axis``), ``custom``
(``path`` to an MSY1 file) or ``zero``; ``initial`` is one of
``random_bandlimited``, ``file`` (``path`` to an ASF1 snapshot) or ``modes``
(list of ``{"k": [...], "amplitude": a}``). Relative paths are resolved
against the config file's directory.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .grid import Grid

CHECKS = ("energy", "levelset", "degiorgi", "linf", "local_energy",
          "second_energy", "shrink", "bmo", "oscillation")

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_PATH = {"type": "object", "required": ["path"], "additionalProperties": False,
         "properties": {"path": {"type": "string", "minLength": 1}}}


def _one_of_keys(options: dict) -> dict:
    return {
        "type": "object", "minProperties": 1, "maxProperties": 1,
        "additionalProperties": False, "properties": options,
    }


SCHEMA = {
    "type": "object",
    "required": ["grid", "operator", "solver", "initial"],
    "additionalProperties": False,
    "properties": {
        "grid": {
            "type": "object", "required": ["d", "dims"], "additionalProperties": False,
            "properties": {
                "d": {"type": "integer", "enum": [2, 3]},
                "dims": {"type": "array", "minItems": 2, "maxItems": 3,
                         "items": {"type": "integer", "minimum": 8, "multipleOf": 2}},
            },
        },
        "operator": _one_of_keys({
            "mg": {"type": "object", "required": ["omega", "beta2_over_eta"],
                   "additionalProperties": False,
                   "properties": {"omega": _POS, "beta2_over_eta": _POS}},
            "perp_riesz": {"type": "object", "required": ["axis"],
                           "additionalProperties": False,
                           "properties": {"axis": {"type": "integer", "enum": [1, 2]}}},
            "custom": _PATH,
            "zero": {"type": "object", "additionalProperties": False},
        }),
        "solver": {
            "type": "object", "required": ["t_final"], "additionalProperties": False,
            "properties": {
                "kappa": _NONNEG,
                "epsilon": _NONNEG,
                "dt": _POS,
                "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "t_final": _POS,
                "dealias": {"type": "boolean"},
                "project_vertical": {"type": "boolean"},
                "forcing": _PATH,
            },
        },
        "initial": _one_of_keys({
            "random_bandlimited": {
                "type": "object", "required": ["k_min", "k_max", "amplitude", "seed"],
                "additionalProperties": False,
                "properties": {"k_min": _NONNEG, "k_max": _POS, "amplitude": _NONNEG,
                               "seed": {"type": "integer", "minimum": 0}},
            },
            "file": _PATH,
            "modes": {
                "type": "array", "minItems": 1,
                "items": {"type": "object", "required": ["k", "amplitude"],
                          "additionalProperties": False,
                          "properties": {"k": {"type": "array", "items": {"type": "integer"},
                                               "minItems": 2, "maxItems": 3},
                                         "amplitude": {"type": "number"}}},
            },
        }),
        "diagnostics": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "checks": {"type": "array", "uniqueItems": True,
                           "items": {"type": "string", "enum": list(CHECKS)}},
                "sample_count": {"type": "integer", "minimum": 1},
                "C0": _POS,
                "H_constant": _POS,
                "seed": {"type": "integer", "minimum": 0},
                "t0": _POS,
                "r_max": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
                "levels": {"type": "integer", "minimum": 3},
                "n_max": {"type": "integer", "minimum": 0, "maximum": 12},
                "min_cells": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "snapshot_interval": _POS},
        },
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violation as "path: message"."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class DiagnosticsConfig:
    checks: tuple = ("energy",)
    sample_count: int = 10
    C0: float = 1.0
    H_constant: float = 4.0
    seed: int = 0
    t0: float | None = None
    r_max: float = 0.5
    levels: int = 8
    n_max: int = 8
    min_cells: int = 4


@dataclass
class RunConfig:
    grid: Grid
    operator: str
    operator_params: dict
    solver: dict
    initial: tuple  # (kind, params)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output_dir: Path | None = None
    snapshot_interval: float | None = None
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _dotted(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        # name the missing field itself
        missing = err.message.split("'")[1] if "'" in err.message else ""
        parts.append(missing)
    elif err.validator == "additionalProperties" and "'" in err.message:
        parts.append(err.message.split("'")[1])
    return ".".join(p for p in parts if p) or "<root>"


def validate(raw: dict) -> list[str]:
    """Every schema and cross-field violation as "dotted.path: message"."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [f"{_dotted(e)}: {e.message}"
              for e in sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))]
    if not isinstance(raw, dict):
        return errors
    grid = raw.get("grid") if isinstance(raw.get("grid"), dict) else {}
    d, dims = grid.get("d"), grid.get("dims")
    if isinstance(d, int) and isinstance(dims, list) and len(dims) != d:
        errors.append(f"grid.dims: has {len(dims)} entries but grid.d = {d}")
    op = raw.get("operator") if isinstance(raw.get("operator"), dict) else {}
    if isinstance(d, int):
        if "mg" in op and d != 3:
            errors.append(f"operator.mg: dimension mismatch, MG needs d = 3 (grid.d = {d})")
        if "perp_riesz" in op and d != 2:
            errors.append(f"operator.perp_riesz: dimension mismatch, needs d = 2 (grid.d = {d})")
        init = raw.get("initial") if isinstance(raw.get("initial"), dict) else {}
        for i, mode in enumerate(init.get("modes") or []):
            if isinstance(mode, dict) and isinstance(mode.get("k"), list) and len(mode["k"]) != d:
                errors.append(f"initial.modes.{i}.k: dimension mismatch with grid.d = {d}")
    solver = raw.get("solver") if isinstance(raw.get("solver"), dict) else {}
    if ("dt" in solver) == ("cfl" in solver):
        errors.append("solver: exactly one of dt / cfl must be given")
    if solver.get("project_vertical") and isinstance(d, int) and d != 3:
        errors.append("solver.project_vertical: needs d = 3")
    return errors


def from_dict(raw: dict, base_dir=None) -> RunConfig:
    errors = validate(raw)
    if errors:
        raise ConfigError(errors)
    grid = Grid(tuple(raw["grid"]["dims"]))
    (op_kind, op_params), = raw["operator"].items()
    solver = dict(raw["solver"])
    solver.setdefault("project_vertical", op_kind == "mg")
    (init_kind, init_params), = raw["initial"].items()
    diag = DiagnosticsConfig(**{
        k: tuple(v) if k == "checks" else v for k, v in raw.get("diagnostics", {}).items()
    })
    out = raw.get("output", {})
    return RunConfig(
        grid=grid, operator=op_kind, operator_params=dict(op_params), solver=solver,
        initial=(init_kind, init_params), diagnostics=diag,
        output_dir=Path(out["dir"]) if "dir" in out else None,
        snapshot_interval=out.get("snapshot_interval"),
        base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
    )


def parse_config(path) -> RunConfig:
    """Read and validate a JSON config; raises ConfigError listing all violations."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: invalid JSON ({exc})"]) from exc
    return from_dict(raw, base_dir=path.parent)


# ------------------------------------------------------------ builders


def build_symbol(cfg: RunConfig):
    from .io import read_symbol
    from .operators import MgParams, mg_symbol, perp_riesz_symbol, zero_symbol

    p = cfg.operator_params
    if cfg.operator == "mg":
        return mg_symbol(MgParams(p["omega"], p["beta2_over_eta"]), cfg.grid)
    if cfg.operator == "perp_riesz":
        return perp_riesz_symbol(p["axis"], cfg.grid)
    if cfg.operator == "custom":
        return read_symbol(cfg.resolve(p["path"]), cfg.grid)
    return zero_symbol(cfg.grid)


def build_initial(cfg: RunConfig):
    from .initial import modes_field, random_bandlimited
    from .io import read_snapshot

    kind, p = cfg.initial
    if kind == "random_bandlimited":
        return random_bandlimited(cfg.grid, p["k_min"], p["k_max"], p["amplitude"],
                                  p["seed"], zero_vertical_mean=cfg.solver["project_vertical"])
    if kind == "file":
        return read_snapshot(cfg.resolve(p["path"]), cfg.grid.dims).values
    return modes_field(cfg.grid, [(m["k"], m["amplitude"]) for m in p])


def build_solver_config(cfg: RunConfig, **overrides):
    from .io import read_snapshot
    from .solver import SolverConfig

    s = dict(cfg.solver)
    forcing = s.pop("forcing", None)
    if forcing is not None:
        s["forcing"] = read_snapshot(cfg.resolve(forcing["path"]), cfg.grid.dims).values
    s["snapshot_interval"] = cfg.snapshot_interval
    s.update(overrides)
    return SolverConfig(**s)
