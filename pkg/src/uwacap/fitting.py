"""Closed-form surrogate models fitted to solver sweeps.

Each quantity Q in {power, band-edge frequency, bandwidth} is modelled as

    Q(l, C) = 10**(a1(C) / 10) * l**a2(C)

where a1 and a2 are linear in a small, quantity-specific basis of C. The
coefficients are reported highest order first with the constant last
(``beta`` for a1, ``alpha`` for a2), which is also the column order of the
emitted coefficient tables. Wind dependence of the power-model coefficients
is itself modelled as a quadratic in 10 log10(w + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

QUANTITY_COLUMNS = {"power": "P_dB", "fend": "f_end_kHz", "bandwidth": "B_kHz"}
QUANTITY_ALIASES = {"p": "power", "power": "power", "fend": "fend", "f_end": "fend", "b": "bandwidth", "bandwidth": "bandwidth"}


class FitError(ValueError):
    pass


def canonical_quantity(name: str) -> str:
    try:
        return QUANTITY_ALIASES[name.lower()]
    except KeyError:
        raise FitError(f"unknown quantity {name!r}; use P, fend or B") from None


def _db(x):
    return 10.0 * np.log10(x)


# Basis columns are listed constant first.
BASES = {
    "power_a1": lambda c: [np.ones_like(c), _db(c), _db(c + 1.0) ** 2],
    "power_a1_plus1": lambda c: [np.ones_like(c), _db(c + 1.0), _db(c + 1.0) ** 2],
    "power_a2": lambda c: [np.ones_like(c), c, c**2],
    "log_quadratic": lambda c: [np.ones_like(c), _db(c), _db(c) ** 2],
    "log_cubic": lambda c: [np.ones_like(c), _db(c), _db(c) ** 2, _db(c) ** 3],
    "wind": lambda w: [np.ones_like(w), _db(w + 1.0), _db(w + 1.0) ** 2],
}

MODEL_BASES = {
    "power": ("power_a1", "power_a2"),
    "fend": ("log_quadratic", "log_quadratic"),
    "bandwidth": ("log_quadratic", "log_cubic"),
}

# Table layout: three beta columns, four alpha columns (leading zeros pad
# the quadratic a2 bases).
N_BETA_COLUMNS = 3
N_ALPHA_COLUMNS = 4


def design_matrix(basis: str, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    try:
        cols = BASES[basis](x)
    except KeyError:
        raise FitError(f"unknown basis {basis!r}") from None
    return np.column_stack(cols)


def fit_basis(basis: str, x, y):
    """OLS of y on the named basis.

    Returns (coefficients highest order first, mse).
    """
    X = design_matrix(basis, x)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise FitError(f"non-finite values in {basis} regression")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise FitError(f"basis {basis!r} is rank deficient on {len(y)} samples")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    mse = float(np.mean((X @ coef - y) ** 2))
    return tuple(float(c) for c in coef[::-1]), mse


def eval_basis(basis: str, coeffs_high_first, x):
    """Evaluate the basis expansion at x (any shape)."""
    x = np.asarray(x, dtype=float)
    X = design_matrix(basis, x.ravel())
    out = (X @ np.asarray(coeffs_high_first, dtype=float)[::-1]).reshape(x.shape)
    return float(out) if out.ndim == 0 else out


@dataclass
class PowerLawFit:
    """Per-capacity fits of 10 log10 Q = a1 + a2 * 10 log10 l."""

    quantity: str
    c_values: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    residual_mse: np.ndarray
    n_distances: np.ndarray


def fit_power_law(table: dict, quantity: str) -> PowerLawFit:
    """Regress 10 log10 Q on 10 log10 l separately for every capacity in ``table``."""
    quantity = canonical_quantity(quantity)
    col = QUANTITY_COLUMNS[quantity]
    l = np.asarray(table["l_km"], dtype=float)
    c = np.asarray(table["C_kbps"], dtype=float)
    q = np.asarray(table[col], dtype=float)
    y_all = q if quantity == "power" else _db(q)
    x_all = _db(l)

    cs = np.unique(c)
    a1, a2, res, counts = [], [], [], []
    for cv in cs:
        m = c == cv
        x, y = x_all[m], y_all[m]
        if len(np.unique(x)) < 3:
            raise FitError(f"C={cv}: need at least 3 distinct distances, got {len(np.unique(x))}")
        if np.var(x) == 0:
            raise FitError(f"C={cv}: distances have zero variance")
        X = np.column_stack([np.ones_like(x), x])
        (b0, b1), *_ = np.linalg.lstsq(X, y, rcond=None)
        a1.append(b0)
        a2.append(b1)
        res.append(np.mean((X @ np.array([b0, b1]) - y) ** 2))
        counts.append(len(x))
    return PowerLawFit(quantity, cs, np.array(a1), np.array(a2), np.array(res), np.array(counts))


@dataclass
class CoefficientModel:
    quantity: str
    a1_basis: str
    a2_basis: str
    beta: tuple
    alpha: tuple
    mse_a1: float
    mse_a2: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.beta) != len(BASES[self.a1_basis](np.ones(1))):
            raise FitError("beta length does not match a1 basis")
        if len(self.alpha) != len(BASES[self.a2_basis](np.ones(1))):
            raise FitError("alpha length does not match a2 basis")
        if self.mse_a1 < 0 or self.mse_a2 < 0:
            raise FitError("MSE must be non-negative")

    def a1(self, c):
        return eval_basis(self.a1_basis, self.beta, c)

    def a2(self, c):
        return eval_basis(self.a2_basis, self.alpha, c)

    def alpha_row(self) -> tuple:
        """alpha padded with leading zeros to the table's four columns."""
        return (0.0,) * (N_ALPHA_COLUMNS - len(self.alpha)) + tuple(self.alpha)

    def beta_row(self) -> tuple:
        return (0.0,) * (N_BETA_COLUMNS - len(self.beta)) + tuple(self.beta)

    @property
    def a2_constant(self) -> float:
        return self.alpha[-1]

    @property
    def a1_constant(self) -> float:
        return self.beta[-1]

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "a1_basis": self.a1_basis,
            "a2_basis": self.a2_basis,
            "beta": list(self.beta),
            "alpha": list(self.alpha),
            "mse_a1": self.mse_a1,
            "mse_a2": self.mse_a2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientModel":
        return cls(d["quantity"], d["a1_basis"], d["a2_basis"], tuple(d["beta"]), tuple(d["alpha"]),
                   float(d["mse_a1"]), float(d["mse_a2"]))


def fit_coefficient_model(fits: PowerLawFit, quantity: str | None = None, power_a1_variant: str = "printed") -> CoefficientModel:
    """Fit a1(C) and a2(C) onto the quantity's bases.

    ``power_a1_variant="plus_one"`` uses 10 log10(C + 1) in both power a1
    regressors instead of the mixed C / C + 1 form.
    """
    quantity = canonical_quantity(quantity or fits.quantity)
    b1, b2 = MODEL_BASES[quantity]
    if quantity == "power":
        if power_a1_variant == "plus_one":
            b1 = "power_a1_plus1"
        elif power_a1_variant != "printed":
            raise FitError(f"unknown power a1 variant {power_a1_variant!r}")
    need = max(design_matrix(b1, np.ones(1)).shape[1], design_matrix(b2, np.ones(1)).shape[1]) + 1
    if len(fits.c_values) < need:
        raise FitError(f"{quantity}: need at least {need} capacities, got {len(fits.c_values)}")
    beta, mse1 = fit_basis(b1, fits.c_values, fits.a1)
    alpha, mse2 = fit_basis(b2, fits.c_values, fits.a2)
    return CoefficientModel(quantity, b1, b2, beta, alpha, mse1, mse2)


def model_eval(model: CoefficientModel, l, c):
    """Surrogate value 10**(a1(C)/10) * l**a2(C); l in km, C in kbit/s."""
    l = np.asarray(l, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(l)) or np.any(l <= 0) or np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise FitError("model_eval needs finite l > 0 and C > 0")
    out = 10.0 ** (np.asarray(model.a1(c)) / 10.0) * l ** np.asarray(model.a2(c))
    return float(out) if out.ndim == 0 else out


def model_eval_db(model: CoefficientModel, l, c):
    return 10.0 * np.log10(model_eval(model, l, c))


# Names follow the table layout of the wind study: three alphas, three betas.
POWER_COEFFICIENTS = ("alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3")


def power_coefficients(model: CoefficientModel) -> dict:
    if model.quantity != "power":
        raise FitError("wind/shipping studies use the power model")
    a, b = model.alpha, model.beta
    return {"alpha1": a[0], "alpha2": a[1], "alpha3": a[2], "beta1": b[0], "beta2": b[1], "beta3": b[2]}


@dataclass
class WindModel:
    """gamma triples (highest order first) per power coefficient, over 10 log10(w + 1)."""

    w_values: tuple
    gamma: dict
    mse: dict

    def psi(self, name: str, w):
        return eval_basis("wind", self.gamma[name], w)


def fit_wind_model(models_by_w: dict) -> WindModel:
    """Fit every power-model coefficient as a quadratic in 10 log10(w + 1)."""
    if len(models_by_w) < 4:
        raise FitError(f"need coefficient models at >= 4 wind speeds, got {len(models_by_w)}")
    ws = np.array(sorted(models_by_w), dtype=float)
    coeffs = [power_coefficients(models_by_w[w]) for w in sorted(models_by_w)]
    gamma, mse = {}, {}
    for name in POWER_COEFFICIENTS:
        gamma[name], mse[name] = fit_basis("wind", ws, [c[name] for c in coeffs])
    return WindModel(tuple(float(w) for w in ws), gamma, mse)


def shipping_sensitivity_report(models_by_s: dict, models_by_w: dict | None = None, rel_threshold: float = 0.01) -> dict:
    """Spread of each power coefficient across shipping activities.

    For each coefficient: max absolute deviation from the mean over s, that
    deviation relative to the mean magnitude, and (when wind models are
    given) the range of the coefficient across wind speeds for comparison.
    """
    if not models_by_s:
        raise FitError("no shipping models given")
    per_s = {s: power_coefficients(m) for s, m in models_by_s.items()}
    per_w = {w: power_coefficients(m) for w, m in (models_by_w or {}).items()}
    out = {}
    for name in POWER_COEFFICIENTS:
        vals = np.array([c[name] for c in per_s.values()])
        mean = float(np.mean(vals))
        dev = float(np.max(np.abs(vals - mean)))
        span = float(np.ptp(vals))
        rel = span / abs(mean) if mean != 0 else (0.0 if span == 0 else math.inf)
        entry = {"values": vals.tolist(), "max_abs_deviation": dev, "range": span, "relative_range": rel,
                 "small": rel < rel_threshold}
        if per_w:
            wv = np.array([c[name] for c in per_w.values()])
            entry["wind_range"] = float(np.ptp(wv))
            entry["small_vs_wind"] = span < float(np.ptp(wv))
        out[name] = entry
    return out
