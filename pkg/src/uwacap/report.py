"""Coefficient tables, plot data and the text report built from sweep files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from pathlib import Path

import numpy as np

from uwacap.config import hash_payload
from uwacap.fitting import (
    POWER_COEFFICIENTS,
    CoefficientModel,
    QUANTITY_COLUMNS,
    FitError,
    fit_coefficient_model,
    fit_power_law,
    fit_wind_model,
    model_eval,
    power_coefficients,
)
from uwacap.sweep import SCHEMA_PREFIX, read_sweep_csv, read_sweep_meta

log = logging.getLogger(__name__)

TABLE_SCHEMA = f"{SCHEMA_PREFIX}-table/1"
COEFF_SCHEMA = f"{SCHEMA_PREFIX}-coefficients/1"
QUANTITIES = ("power", "fend", "bandwidth")
QUANTITY_LABELS = {"power": "P(l,C)", "fend": "f_end(l,C)", "bandwidth": "B(l,C)"}
ALPHA_HEADER = ("alpha1", "alpha2", "alpha3", "alpha4", "MSE")
BETA_HEADER = ("beta1", "beta2", "beta3", "MSE")
# Base environment of the per-case coefficient tables.
BASE_S, BASE_W = 0.5, 0.0


class ReportError(RuntimeError):
    pass


def spreading_reference_offset_db(k: float, from_ref_km: float = 1.0, to_ref_km: float = 1e-3) -> float:
    """dB added to power intercepts when the spreading reference changes.

    (l/to_ref)**k = (from_ref/to_ref)**k * (l/from_ref)**k, so only the
    power a1 intercept moves; exponents, band edges and bandwidth do not.
    """
    return 10.0 * k * math.log10(from_ref_km / to_ref_km)


def fit_all(table: dict, power_a1_variant: str = "printed") -> dict:
    return {
        q: fit_coefficient_model(fit_power_law(table, q), q, power_a1_variant=power_a1_variant)
        for q in QUANTITIES
    }


def _g(x) -> str:
    return f"{x:.6g}"


def _csv_text(comment: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_g(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def alpha_rows(models: dict) -> list:
    return [(q, *models[q].alpha_row(), models[q].mse_a2) for q in QUANTITIES if q in models]


def beta_rows(models: dict) -> list:
    return [(q, *models[q].beta_row(), models[q].mse_a1) for q in QUANTITIES if q in models]


def format_coefficient_csv(models: dict, config_hash: str) -> str:
    """Both coefficient sets per quantity in one file."""
    rows = []
    for q, m in models.items():
        rows.append((q, "a2", m.a2_basis, *m.alpha_row(), m.mse_a2))
        rows.append((q, "a1", m.a1_basis, *m.beta_row(), "", m.mse_a1))
    header = ("quantity", "parameter", "basis", "c1", "c2", "c3", "c4", "MSE")
    return _csv_text(f"{COEFF_SCHEMA} config={config_hash}", header, rows)


def read_coefficient_csv(path) -> dict:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    parts = {}
    for r in rows:
        coeffs = [float(r[c]) for c in ("c1", "c2", "c3", "c4") if r[c] != ""]
        parts.setdefault(r["quantity"], {})[r["parameter"]] = (r["basis"], coeffs, float(r["MSE"]))
    out = {}
    for q, p in parts.items():
        b2, alpha, mse2 = p["a2"]
        b1, beta, mse1 = p["a1"]
        n_alpha = {"power_a2": 3, "log_quadratic": 3, "log_cubic": 4}[b2]
        out[q] = CoefficientModel(q, b1, b2, tuple(beta[-3:]), tuple(alpha[-n_alpha:]), mse1, mse2)
    return out


def format_model_text(models: dict, title: str, k: float | None = None) -> str:
    lines = [title, ""]
    lines.append("a2(C) coefficients")
    lines.append(f"{'':14s}" + "".join(f"{h:>14s}" for h in ALPHA_HEADER))
    for q, *vals in alpha_rows(models):
        lines.append(f"{QUANTITY_LABELS[q]:14s}" + "".join(f"{v:>14.6g}" for v in vals))
    lines.append("")
    lines.append("a1(C) coefficients")
    lines.append(f"{'':14s}" + "".join(f"{h:>14s}" for h in BETA_HEADER))
    for q, *vals in beta_rows(models):
        lines.append(f"{QUANTITY_LABELS[q]:14s}" + "".join(f"{v:>14.6g}" for v in vals))
    if k is not None and "power" in models:
        off = spreading_reference_offset_db(k)
        lines.append("")
        lines.append(
            f"power beta3 with a 1 m spreading reference: {models['power'].beta[-1] + off:.6g} dB "
            f"(+{off:.4g} dB from the 1 km reference)"
        )
    return "\n".join(lines) + "\n"


def plot_rows(table: dict, model: CoefficientModel) -> list:
    fit = fit_power_law(table, model.quantity)
    return [
        (float(c), float(a1), float(model.a1(c)), float(a2), float(model.a2(c)))
        for c, a1, a2 in zip(fit.c_values, fit.a1, fit.a2)
    ]


def load_sweeps(directory) -> list:
    out = []
    for path in sorted(Path(directory).glob("*.csv")):
        meta = read_sweep_meta(path)
        if not str(meta.get("schema", "")).startswith(f"{SCHEMA_PREFIX}-sweep/"):
            continue
        out.append({"path": path, "meta": meta, "table": read_sweep_csv(path)})
    return out


def _pick(sweeps, case, s, w):
    for sw in sweeps:
        m = sw["meta"]
        if m.get("case") == case and m.get("s") == s and m.get("w") == w:
            return sw
    return None


def build_report(sweep_dir, out_dir) -> dict:
    """Regenerate the coefficient tables, wind study and plot data from sweep CSVs.

    Returns the manifest (also written to ``manifest.json``).
    """
    sweeps = load_sweeps(sweep_dir)
    if not sweeps:
        raise ReportError(f"no sweep CSVs found in {sweep_dir}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_hash = hash_payload(sorted((sw["path"].name, sw["meta"].get("config", "")) for sw in sweeps))
    tag = f"config={report_hash}"
    files, missing = [], []
    text = [f"Report {tag}", f"inputs: {', '.join(sw['path'].name for sw in sweeps)}", ""]

    def write(name, content):
        (out / name).write_text(content)
        files.append(name)

    for n_case, case in ((1, "case1"), (2, "case2")):
        base = _pick(sweeps, case, BASE_S, BASE_W)
        t_alpha, t_beta = 2 * n_case - 1, 2 * n_case
        if base is None:
            missing += [f"table{t_alpha}", f"table{t_beta}"]
            continue
        models = fit_all(base["table"])
        write(f"table{t_alpha}_{case}_alpha.csv", _csv_text(f"{TABLE_SCHEMA} {tag}", ("quantity", *ALPHA_HEADER), alpha_rows(models)))
        write(f"table{t_beta}_{case}_beta.csv", _csv_text(f"{TABLE_SCHEMA} {tag}", ("quantity", *BETA_HEADER), beta_rows(models)))
        for q, m in models.items():
            write(f"plot_{case}_{q}.csv", _csv_text(f"{TABLE_SCHEMA} {tag}", ("C_kbps", "a1", "a1_model", "a2", "a2_model"), plot_rows(base["table"], m)))
        text.append(format_model_text(models, f"{case}: k={base['meta'].get('k')}, s={BASE_S}, w={BASE_W}", base["meta"].get("k")))

    case1 = [sw for sw in sweeps if sw["meta"].get("case") == "case1"]
    grid = {}
    for sw in case1:
        try:
            grid[(sw["meta"]["w"], sw["meta"]["s"])] = fit_coefficient_model(fit_power_law(sw["table"], "power"), "power")
        except (KeyError, FitError) as exc:
            log.warning("skipping %s: %s", sw["path"].name, exc)
    if len(grid) > 1:
        rows = [(w, s, *power_coefficients(m).values()) for (w, s), m in sorted(grid.items())]
        write("table5_case1_shipping_wind.csv", _csv_text(f"{TABLE_SCHEMA} {tag}", ("w", "s", *POWER_COEFFICIENTS), rows))
        text.append("case1 power coefficients by wind speed and shipping activity")
        text.append(f"{'w':>6s}{'s':>6s}" + "".join(f"{h:>12s}" for h in POWER_COEFFICIENTS))
        for r in rows:
            text.append(f"{r[0]:>6g}{r[1]:>6g}" + "".join(f"{v:>12.5g}" for v in r[2:]))
        text.append("")
    else:
        missing.append("table5")

    by_w = {w: m for (w, s), m in grid.items() if s == BASE_S}
    if len(by_w) >= 4:
        wm = fit_wind_model(by_w)
        rows = [(name, *wm.gamma[name], wm.mse[name]) for name in POWER_COEFFICIENTS]
        write("table6_case1_wind_gamma.csv", _csv_text(f"{TABLE_SCHEMA} {tag}", ("coefficient", "gamma1", "gamma2", "gamma3", "MSE"), rows))
        text.append(f"wind model over w = {', '.join(f'{w:g}' for w in wm.w_values)} (s={BASE_S})")
        for name, g1, g2, g3, mse in rows:
            text.append(f"{name:>8s}{g1:>14.5g}{g2:>14.5g}{g3:>14.5g}   MSE {mse:.3g}")
        text.append("")
    else:
        missing.append("table6")

    if missing:
        text.append(f"not generated (inputs missing): {', '.join(missing)}")
    write("report.txt", "\n".join(text) + "\n")
    manifest = {"schema": f"{SCHEMA_PREFIX}-report/1", "config_hash": report_hash, "files": sorted(files), "missing": missing}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def surrogate_table(model: CoefficientModel, l_values, c_values) -> dict:
    """Sweep-shaped table whose ``model.quantity`` column is the surrogate itself."""
    L, C = np.meshgrid(np.asarray(l_values, float), np.asarray(c_values, float), indexing="ij")
    L, C = L.ravel(), C.ravel()
    table = {col: np.full(L.shape, np.nan) for col in ("P_dB", "f_ini_kHz", "f_end_kHz", "B_kHz", "K_dB", "f0_kHz")}
    table["l_km"], table["C_kbps"] = L, C
    q = model_eval(model, L, C)
    col = QUANTITY_COLUMNS[model.quantity]
    table[col] = 10 * np.log10(q) if model.quantity == "power" else q
    return table
