"""Command-line entry point: ``uwacap {psd,solve,sweep,fit,report}``.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 schema/config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

from uwacap.config import ConfigError, RunConfig, hash_payload, load_config
from uwacap.fitting import FitError, canonical_quantity, fit_coefficient_model, fit_power_law
from uwacap.physics import DomainError, noise_components
from uwacap.report import (
    QUANTITIES,
    ReportError,
    build_report,
    format_coefficient_csv,
    format_model_text,
)
from uwacap.solver import CapacityUnreachable, LinkQuery, SolverError, solve_link
from uwacap.sweep import (
    SCHEMA_PREFIX,
    SchemaError,
    SweepError,
    read_sweep_csv,
    read_sweep_meta,
    run_sweep,
    sweep_comment,
    write_sweep_csv,
)

EXIT_USAGE, EXIT_SOLVER, EXIT_SCHEMA = 1, 2, 3
SOLUTION_SCHEMA = f"{SCHEMA_PREFIX}-solution/1"
REPORT_WIND = (0.0, 2.0, 5.0, 10.0, 20.0)
REPORT_SHIPPING = (0.0, 0.5, 1.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_env_args(p):
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--k", type=float, help="spreading factor")
    p.add_argument("--s", type=float, help="shipping activity, 0..1")
    p.add_argument("--w", type=float, help="wind speed, m/s")
    p.add_argument("--n-freq", type=int, help="frequency grid points")
    p.add_argument("--f-min", type=float, help="lowest grid frequency, kHz")
    p.add_argument("--f-max", type=float, help="highest grid frequency, kHz")


def _add_solver_args(p):
    p.add_argument("--mode", choices=("brent", "epsilon"), help="level search")
    p.add_argument("--integration", choices=("trapezoid", "simpson"))


def _overrides(args) -> dict:
    env = {key: getattr(args, attr) for key, attr in
           (("k", "k"), ("s", "s"), ("w", "w"), ("n_freq", "n_freq"), ("f_min_khz", "f_min"), ("f_max_khz", "f_max"))
           if getattr(args, attr, None) is not None}
    solver = {key: getattr(args, key) for key in ("mode", "integration") if getattr(args, key, None) is not None}
    sweep = {key: getattr(args, attr) for key, attr in
             (("case", "case"), ("n_l", "n_l"), ("n_c", "n_c"), ("spacing", "spacing"))
             if getattr(args, attr, None) is not None}
    out = {"env": env, "solver": solver, "sweep": sweep}
    if getattr(args, "workers", None) is not None:
        out["workers"] = args.workers
    return out


def _config(args) -> RunConfig:
    return load_config(getattr(args, "config", None), _overrides(args))


def cmd_psd(args) -> int:
    if not (math.isfinite(args.freq) and args.freq > 0):
        raise UsageError("--freq must be a positive frequency in kHz")
    cfg = _config(args)
    comps = noise_components(args.freq, cfg.env)
    comps["total"] = sum(comps.values())
    print(f"# f={args.freq:g} kHz s={cfg.env.s:g} w={cfg.env.w:g} config={cfg.config_hash()}")
    for name, val in comps.items():
        print(f"{name:<11s}{10 * math.log10(val):10.3f} dB{val:16.6g} linear")
    return 0


def cmd_solve(args) -> int:
    cfg = _config(args)
    try:
        q = LinkQuery(args.l, args.c)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    sol = solve_link(q, cfg.env, cfg.solver)
    out = {"schema": SOLUTION_SCHEMA,
           "config_hash": hash_payload({"config": cfg.result_dict(), "l": args.l, "c": args.c})}
    out.update(sol.to_dict())
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _write_one_sweep(cfg: RunConfig, path: Path) -> Path:
    spec = cfg.sweep_spec()
    result = run_sweep(spec, workers=cfg.workers)
    path.parent.mkdir(parents=True, exist_ok=True)
    return write_sweep_csv(result, path, sweep_comment(spec, cfg.config_hash()))


def report_sweep_configs(base: RunConfig) -> list:
    """(file name, config) pairs for every sweep the full report needs."""
    jobs = []
    for case in ("case1", "case2"):
        g = dataclasses.replace(base.sweep, case=case, l_values=None, c_values=None)
        env = base.env.replace(s=0.5, w=0.0)
        jobs.append((case, dataclasses.replace(base, env=env, sweep=g)))
    g1 = dataclasses.replace(base.sweep, case="case1", l_values=None, c_values=None)
    for w in REPORT_WIND:
        for s in REPORT_SHIPPING:
            if (w, s) == (0.0, 0.5):
                continue
            env = base.env.replace(s=s, w=w)
            jobs.append((f"case1_s{s:g}_w{w:g}", dataclasses.replace(base, env=env, sweep=g1)))
    return [(f"{name}.csv", cfg) for name, cfg in jobs]


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.all:
        out_dir = Path(args.out_dir or cfg.output_dir)
        for name, sub in report_sweep_configs(cfg):
            path = _write_one_sweep(sub, out_dir / name)
            print(f"wrote {path}")
        return 0
    path = Path(args.out) if args.out else Path(args.out_dir or cfg.output_dir) / f"{cfg.sweep.case}.csv"
    print(f"wrote {_write_one_sweep(cfg, path)}")
    return 0


def cmd_fit(args) -> int:
    try:
        quantities = QUANTITIES if args.quantity.lower() == "all" else (canonical_quantity(args.quantity),)
    except FitError as exc:
        raise UsageError(str(exc)) from exc
    table = read_sweep_csv(args.input)
    meta = read_sweep_meta(args.input)
    models = {q: fit_coefficient_model(fit_power_law(table, q), q, power_a1_variant=args.power_a1_variant)
              for q in quantities}
    h = hash_payload({"input": meta.get("config", Path(args.input).name), "quantities": list(quantities),
                      "variant": args.power_a1_variant})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = "all" if len(quantities) > 1 else quantities[0]
    (out_dir / f"coefficients_{stem}.csv").write_text(format_coefficient_csv(models, h))
    text = format_model_text(models, f"fit of {Path(args.input).name} config={h}", meta.get("k"))
    (out_dir / f"fit_{stem}.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_report(args) -> int:
    manifest = build_report(args.sweeps, args.out_dir)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uwacap", description="Underwater acoustic link capacity, power and band models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("psd", help="ambient noise psd components at one frequency")
    p.add_argument("--freq", type=float, required=True, help="frequency, kHz")
    _add_env_args(p)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("solve", help="solve one link and print the solution as JSON")
    p.add_argument("--l", type=float, required=True, help="distance, km")
    p.add_argument("--c", type=float, required=True, help="target capacity, kbit/s")
    _add_env_args(p)
    _add_solver_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve an (l, C) grid and write a sweep CSV")
    p.add_argument("--case", choices=("case1", "case2"))
    p.add_argument("--n-l", type=int)
    p.add_argument("--n-c", type=int)
    p.add_argument("--spacing", choices=("log", "linear"))
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--all", action="store_true", help="write every sweep the full report needs")
    _add_env_args(p)
    _add_solver_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit surrogate models to a sweep CSV")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--quantity", default="all", help="P, fend, B or all")
    p.add_argument("--out-dir", default=".", type=Path)
    p.add_argument("--power-a1-variant", choices=("printed", "plus_one"), default="printed")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="rebuild all coefficient tables and plot data from sweeps")
    p.add_argument("--sweeps", required=True, type=Path)
    p.add_argument("--out-dir", default="report", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"uwacap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityUnreachable, SolverError, SweepError) as exc:
        print(f"uwacap: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, SchemaError, FitError, ReportError, DomainError) as exc:
        print(f"uwacap: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"uwacap: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
