"""Rectangular (distance, capacity) sweeps of the waterfilling solver."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from uwacap.physics import EnvironmentParams
from uwacap.solver import DEFAULT_SETTINGS, LinkQuery, LinkSolution, SolverSettings, solve_link

log = logging.getLogger(__name__)

SCHEMA_PREFIX = "uwacap"
SWEEP_SCHEMA = f"{SCHEMA_PREFIX}-sweep/1"
COLUMNS = ("l_km", "C_kbps", "P_dB", "f_ini_kHz", "f_end_kHz", "B_kHz", "K_dB", "f0_kHz")

# Distance and capacity ranges of the two reference cases; the zero endpoint
# is replaced by 1% of the range because the models use log10 of both.
CASES = {
    "case1": {"l_max_km": 10.0, "c_max_kbps": 2.0},
    "case2": {"l_max_km": 100.0, "c_max_kbps": 100.0},
}


class SweepError(RuntimeError):
    pass


class SchemaError(ValueError):
    pass


def axis(upper: float, n: int = 40, spacing: str = "log", lower_frac: float = 0.01) -> tuple:
    """Grid axis on [lower_frac * upper, upper]."""
    lo = lower_frac * upper
    if spacing == "log":
        pts = np.logspace(math.log10(lo), math.log10(upper), n)
    elif spacing == "linear":
        pts = np.linspace(lo, upper, n)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    return tuple(float(x) for x in pts)


@dataclass(frozen=True)
class SweepSpec:
    l_values: tuple
    c_values: tuple
    env: EnvironmentParams = EnvironmentParams()
    case_label: str = "custom"
    settings: SolverSettings = DEFAULT_SETTINGS

    def __post_init__(self):
        for name in ("l_values", "c_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be nonempty")
            if any(not (math.isfinite(v) and v > 0) for v in vals):
                raise ValueError(f"{name} must be finite and positive")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, vals)


def case_spec(case: str, env: EnvironmentParams = EnvironmentParams(), n_l: int = 40, n_c: int = 40,
              spacing: str = "log", settings: SolverSettings = DEFAULT_SETTINGS) -> SweepSpec:
    try:
        rng = CASES[case]
    except KeyError:
        raise ValueError(f"unknown case {case!r}; choose from {sorted(CASES)}") from None
    return SweepSpec(
        l_values=axis(rng["l_max_km"], n_l, spacing),
        c_values=axis(rng["c_max_kbps"], n_c, spacing),
        env=env,
        case_label=case,
        settings=settings,
    )


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: list  # cells[i_l][i_c]
    metadata: dict = field(default_factory=dict)

    def cell(self, i_l: int, i_c: int) -> LinkSolution:
        return self.cells[i_l][i_c]

    @property
    def n_truncated(self) -> int:
        return sum(sol.truncated for row in self.cells for sol in row)


def _solve_cell(args):
    l, c, env, settings = args
    try:
        return solve_link(LinkQuery(l, c), env, settings)
    except Exception as exc:
        raise SweepError(f"cell (l={l!r} km, C={c!r} kbit/s) failed: {exc}") from exc


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Solve every (l, C) cell. Output order is fixed regardless of ``workers``."""
    t0 = time.time()
    jobs = [(l, c, spec.env, spec.settings) for l in spec.l_values for c in spec.c_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(_solve_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        flat = [_solve_cell(j) for j in jobs]
    n_c = len(spec.c_values)
    cells = [flat[i * n_c:(i + 1) * n_c] for i in range(len(spec.l_values))]
    result = SweepResult(
        spec,
        cells,
        metadata={"started": t0, "elapsed_s": time.time() - t0, "n_cells": len(flat)},
    )
    if result.n_truncated:
        log.warning("%d of %d cells have a band clipped by the frequency grid", result.n_truncated, len(flat))
    return result


def sweep_to_table(result: SweepResult) -> list:
    """Flatten to rows ordered by distance then capacity, columns as ``COLUMNS``."""
    rows = []
    for row in result.cells:
        for sol in row:
            rows.append((sol.l_km, sol.c_target, sol.power_db, sol.f_ini, sol.f_end,
                         sol.bandwidth_khz, sol.k_level_db, sol.f0))
    return rows


def _fmt(x) -> str:
    return "nan" if x is None else f"{x:.10g}"


def format_sweep_csv(rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# {SWEEP_SCHEMA}" + (f" {comment}" if comment else "") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_sweep_csv(result_or_rows, path, comment: str | None = None) -> Path:
    rows = sweep_to_table(result_or_rows) if isinstance(result_or_rows, SweepResult) else result_or_rows
    path = Path(path)
    path.write_text(format_sweep_csv(rows, comment))
    return path


def read_sweep_csv(path) -> dict:
    """Read a sweep CSV into a dict of float arrays keyed by column name."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{path}: empty sweep file") from None
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    idx = [header.index(c) for c in COLUMNS]
    data = []
    for n, rec in enumerate(reader, start=2):
        try:
            data.append([float(rec[i]) for i in idx])
        except (IndexError, ValueError) as exc:
            raise SchemaError(f"{path}: bad row {n}: {exc}") from None
    if not data:
        raise SchemaError(f"{path}: no data rows")
    arr = np.array(data)
    return {c: arr[:, j] for j, c in enumerate(COLUMNS)}


def sweep_comment(spec: SweepSpec, config_hash: str | None = None) -> str:
    """Metadata carried in the sweep CSV's leading comment line."""
    parts = [f"case={spec.case_label}", f"k={spec.env.k:.10g}", f"s={spec.env.s:.10g}", f"w={spec.env.w:.10g}"]
    if config_hash:
        parts.insert(0, f"config={config_hash}")
    return " ".join(parts)


def read_sweep_meta(path) -> dict:
    """Parse ``key=value`` pairs from the leading comment line of a sweep CSV."""
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("#"):
        return {}
    tokens = first.lstrip("#").split()
    meta = {"schema": tokens[0]} if tokens else {}
    for tok in tokens[1:]:
        key, sep, val = tok.partition("=")
        if sep:
            meta[key] = val
    for key in ("k", "s", "w"):
        if key in meta:
            meta[key] = float(meta[key])
    return meta


def table_from_result(result: SweepResult) -> dict:
    """Same dict-of-arrays view as ``read_sweep_csv`` without a file round trip."""
    arr = np.array(sweep_to_table(result), dtype=float)
    return {c: arr[:, j] for j, c in enumerate(COLUMNS)}
