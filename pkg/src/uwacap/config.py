"""Run configuration: JSON file + CLI overrides, validated and hashed."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from uwacap.physics import DomainError, EnvironmentParams
from uwacap.solver import SolverSettings
from uwacap.sweep import CASES, SweepSpec, axis


class ConfigError(ValueError):
    pass


_ENV_KEYS = {f.name for f in dataclasses.fields(EnvironmentParams)}
_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverSettings)}
_SWEEP_KEYS = {"case", "n_l", "n_c", "spacing", "l_values", "c_values"}
_TOP_KEYS = {"env", "solver", "sweep", "output_dir", "workers"}


@dataclass(frozen=True)
class SweepGrid:
    case: str = "case1"
    n_l: int = 40
    n_c: int = 40
    spacing: str = "log"
    l_values: tuple | None = None
    c_values: tuple | None = None


@dataclass(frozen=True)
class RunConfig:
    env: EnvironmentParams = EnvironmentParams()
    solver: SolverSettings = SolverSettings()
    sweep: SweepGrid = SweepGrid()
    output_dir: str = "out"
    workers: int = 1

    def result_dict(self) -> dict:
        """Everything that affects numerical output (not paths or parallelism)."""
        return {
            "env": dataclasses.asdict(self.env),
            "solver": dataclasses.asdict(self.solver),
            "sweep": {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self.sweep).items()},
        }

    def config_hash(self) -> str:
        return hash_payload(self.result_dict())

    def sweep_spec(self) -> SweepSpec:
        g = self.sweep
        rng = CASES.get(g.case)
        if rng is None and (g.l_values is None or g.c_values is None):
            raise ConfigError(f"unknown case {g.case!r} and no explicit l_values/c_values")
        l_values = g.l_values or axis(rng["l_max_km"], g.n_l, g.spacing)
        c_values = g.c_values or axis(rng["c_max_kbps"], g.n_c, g.spacing)
        try:
            return SweepSpec(tuple(l_values), tuple(c_values), self.env, g.case, self.solver)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def hash_payload(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _reject_unknown(section: str, given: dict, allowed: set):
    extra = sorted(set(given) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(extra)}")


def config_from_dict(data: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from nested dicts; ``overrides`` use the same shape and win."""
    data = _merge(data or {}, overrides or {})
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown("config", data, _TOP_KEYS)
    env_d, solver_d, sweep_d = data.get("env", {}), data.get("solver", {}), data.get("sweep", {})
    _reject_unknown("env", env_d, _ENV_KEYS)
    _reject_unknown("solver", solver_d, _SOLVER_KEYS)
    _reject_unknown("sweep", sweep_d, _SWEEP_KEYS)
    try:
        env = EnvironmentParams(**env_d)
        solver = SolverSettings(**solver_d)
        sweep_d = {k: (tuple(v) if isinstance(v, list) else v) for k, v in sweep_d.items()}
        grid = SweepGrid(**sweep_d)
        workers = int(data.get("workers", 1))
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from exc
    if grid.spacing not in ("log", "linear"):
        raise ConfigError(f"unknown spacing {grid.spacing!r}")
    return RunConfig(env, solver, grid, str(data.get("output_dir", "out")), workers)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data, overrides)


def _merge(base, extra):
    if not isinstance(base, dict) or not isinstance(extra, dict):
        return extra
    out = dict(base)
    for k, v in extra.items():
        out[k] = _merge(base.get(k), v) if isinstance(v, dict) and isinstance(base.get(k), dict) else v
    return out
