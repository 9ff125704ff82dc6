"""Acoustic propagation loss and ambient noise in seawater.

Frequencies are in kHz and distances in km throughout. Noise spectra are
relative linear psd values (10**(dB/10)); only ratios and dB differences are
physically meaningful.

All functions accept scalars or numpy arrays. The solver works with the
``log10_*`` variants, which stay finite where the linear path loss would
overflow (long links at high frequency).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Thorp's high-frequency formula applies from a few hundred Hz upward.
THORP_LOW_FREQ_KHZ = 0.3


class DomainError(ValueError):
    """Raised for inputs outside the physical domain (f <= 0, l <= 0, ...)."""


@dataclass(frozen=True)
class EnvironmentParams:
    """Propagation environment plus the frequency grid used to sample it.

    :param k: spreading factor (1 cylindrical, 1.5 practical, 2 spherical)
    :param s: shipping activity in [0, 1]
    :param w: wind speed in m/s
    :param f_min_khz: lowest grid frequency
    :param f_max_khz: highest grid frequency
    :param n_freq: number of log-spaced grid points
    :param l_ref_km: reference distance of the spreading term ``(l/l_ref)**k``
    """

    k: float = 1.5
    s: float = 0.5
    w: float = 0.0
    f_min_khz: float = 0.01
    f_max_khz: float = 1000.0
    n_freq: int = 2000
    l_ref_km: float = 1.0

    def __post_init__(self):
        for name in ("k", "s", "w", "f_min_khz", "f_max_khz", "l_ref_km"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not 0.0 <= self.s <= 1.0:
            raise DomainError(f"shipping activity s={self.s} outside [0, 1]")
        if self.w < 0.0:
            raise DomainError(f"wind speed w={self.w} must be >= 0")
        if not 1.0 <= self.k <= 2.0:
            warnings.warn(f"spreading factor k={self.k} outside the usual [1, 2] range", stacklevel=3)
        if not 0.0 < self.f_min_khz < self.f_max_khz:
            raise DomainError("frequency grid needs 0 < f_min_khz < f_max_khz")
        if int(self.n_freq) != self.n_freq or self.n_freq < 3:
            raise DomainError("n_freq must be an integer >= 3")
        if self.l_ref_km <= 0.0:
            raise DomainError("l_ref_km must be positive")

    def replace(self, **changes) -> "EnvironmentParams":
        fields = {**self.__dict__, **changes}
        return EnvironmentParams(**fields)


def _check_positive(name, x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} must be finite and > 0, got {x!r}")
    return arr


def _as_output(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


@lru_cache(maxsize=32)
def _grid(f_min, f_max, n):
    g = np.logspace(math.log10(f_min), math.log10(f_max), n)
    g.flags.writeable = False
    return g


def frequency_grid(env: EnvironmentParams) -> np.ndarray:
    """Log-spaced frequency grid in kHz (read-only, shared between calls)."""
    return _grid(env.f_min_khz, env.f_max_khz, int(env.n_freq))


def absorption_db_per_km(f):
    """Thorp absorption coefficient in dB/km, f in kHz.

    Below ``THORP_LOW_FREQ_KHZ`` the low-frequency variant is used. The seam
    at 0.3 kHz has a jump of about 1.0e-3 dB/km.

    >>> round(absorption_db_per_km(10.0), 4)
    1.1868
    """
    f = _check_positive("frequency", f)
    f2 = f * f
    high = 0.11 * f2 / (1 + f2) + 44 * f2 / (4100 + f2) + 2.75e-4 * f2 + 0.003
    low = 0.11 * f2 / (1 + f2) + 0.011 * f2 + 0.002
    return _as_output(np.where(f >= THORP_LOW_FREQ_KHZ, high, low), f)


def log10_path_loss(l, f, env: EnvironmentParams):
    """log10 of the path loss A(l, f) = (l/l_ref)**k * a(f)**l."""
    l = _check_positive("distance", l)
    a_db = absorption_db_per_km(f)
    out = env.k * np.log10(l / env.l_ref_km) + a_db * l / 10.0
    return _as_output(out, out)


def path_loss_linear(l, f, env: EnvironmentParams):
    """Linear path loss A(l, f). Overflows to inf for very long, high-f links."""
    with np.errstate(over="ignore"):
        return _as_output(np.power(10.0, log10_path_loss(l, f, env)), np.asarray(l) * np.asarray(f))


def noise_components(f, env: EnvironmentParams) -> dict:
    """Linear psd of turbulence, shipping, wind and thermal noise at f (kHz).

    Each formula gives log10 of the psd (dB re uPa/Hz divided by 10).
    """
    f = _check_positive("frequency", f)
    lf = np.log10(f)
    log_t = 1.7 - 3 * lf
    log_s = 4 + 2 * (env.s - 0.5) + 2.6 * lf - 6 * np.log10(f + 0.03)
    log_w = 5 + 0.75 * math.sqrt(env.w) + 2 * lf - 4 * np.log10(f + 0.4)
    log_th = -1.5 + 2 * lf
    return {
        "turbulence": _as_output(10.0**log_t, f),
        "shipping": _as_output(10.0**log_s, f),
        "wind": _as_output(10.0**log_w, f),
        "thermal": _as_output(10.0**log_th, f),
    }


def noise_psd_linear(f, env: EnvironmentParams):
    """Total ambient noise psd; components are summed in linear scale."""
    c = noise_components(f, env)
    return c["turbulence"] + c["shipping"] + c["wind"] + c["thermal"]


def log10_an_product(l, f, env: EnvironmentParams):
    """log10 of A(l, f) * N(f)."""
    return log10_path_loss(l, f, env) + np.log10(noise_psd_linear(f, env))


def an_product(l, f, env: EnvironmentParams):
    """A(l, f) * N(f), the attenuation-to-noise curve the waterfilling level sits on."""
    with np.errstate(over="ignore"):
        out = np.power(10.0, log10_an_product(l, f, env))
    return _as_output(out, out)


def log10_an_scalar(l: float, f: float, env: EnvironmentParams) -> float:
    """Scalar ``log10_an_product`` using math only; used inside edge bisection."""
    f2 = f * f
    if f >= THORP_LOW_FREQ_KHZ:
        a_db = 0.11 * f2 / (1 + f2) + 44 * f2 / (4100 + f2) + 2.75e-4 * f2 + 0.003
    else:
        a_db = 0.11 * f2 / (1 + f2) + 0.011 * f2 + 0.002
    lf = math.log10(f)
    noise = (
        10.0 ** (1.7 - 3 * lf)
        + 10.0 ** (4 + 2 * (env.s - 0.5) + 2.6 * lf - 6 * math.log10(f + 0.03))
        + 10.0 ** (5 + 0.75 * math.sqrt(env.w) + 2 * lf - 4 * math.log10(f + 0.4))
        + 10.0 ** (-1.5 + 2 * lf)
    )
    return env.k * math.log10(l / env.l_ref_km) + a_db * l / 10.0 + math.log10(noise)


def optimal_frequency(l: float, env: EnvironmentParams) -> float:
    """Grid frequency minimising A(l, f) N(f); ties go to the lower frequency."""
    grid = frequency_grid(env)
    return float(grid[int(np.argmin(log10_an_product(l, grid, env)))])
