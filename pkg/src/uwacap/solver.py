"""Waterfilling solver: level K, band, power and capacity for a link (l, C).

For a level K the transmission band is the set of frequencies where
A(l, f) N(f) <= K. Capacity (kbit/s) is the integral of log2(K / AN) over the
band with df in kHz; power is the integral of K - AN over the band.

Capacity is strictly increasing in K once the band is non-empty, so the level
is found by a bracketed root search on log10 K. An epsilon-increment mode
steps K up in fixed dB increments from the minimum of AN instead.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from uwacap.physics import (
    DomainError,
    EnvironmentParams,
    frequency_grid,
    log10_an_product,
    log10_an_scalar,
)

log = logging.getLogger(__name__)

LOG10_2 = math.log10(2.0)
LN10 = math.log(10.0)


class CapacityUnreachable(RuntimeError):
    """Target capacity needs a level above the configured cap."""

    def __init__(self, target, achieved_max):
        super().__init__(
            f"capacity {target} kbit/s unreachable; maximum achieved {achieved_max:.6g} kbit/s"
        )
        self.target = target
        self.achieved_max = achieved_max


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs of the solver.

    ``k_max_db`` caps the level at ``min(AN) * 10**(k_max_db/10)``.
    """

    capacity_rtol: float = 1e-6
    capacity_atol: float = 1e-9
    edge_rtol: float = 1e-6
    integration: str = "trapezoid"
    mode: str = "brent"
    epsilon_db: float = 0.01
    k_max_db: float = 300.0

    def __post_init__(self):
        if self.integration not in ("trapezoid", "simpson"):
            raise ValueError(f"unknown integration rule {self.integration!r}")
        if self.mode not in ("brent", "epsilon"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.edge_rtol <= 0 or self.capacity_rtol <= 0 or self.epsilon_db <= 0:
            raise ValueError("tolerances and epsilon must be positive")


DEFAULT_SETTINGS = SolverSettings()


@dataclass(frozen=True)
class LinkQuery:
    l: float
    c_target: float

    def __post_init__(self):
        if not (math.isfinite(self.l) and self.l > 0):
            raise DomainError(f"distance must be finite and > 0, got {self.l!r}")
        if not (math.isfinite(self.c_target) and self.c_target >= 0):
            raise DomainError(f"target capacity must be finite and >= 0, got {self.c_target!r}")


@dataclass(frozen=True)
class TransmissionBand:
    """Sorted, disjoint frequency intervals (kHz). Empty for a zero-capacity link."""

    intervals: tuple = ()

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        prev_hi = -math.inf
        for lo, hi in ivs:
            if not lo < hi:
                raise ValueError(f"interval ({lo}, {hi}) is not increasing")
            if lo <= prev_hi:
                raise ValueError("intervals must be sorted and disjoint")
            prev_hi = hi
        object.__setattr__(self, "intervals", ivs)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def f_ini(self):
        return self.intervals[0][0] if self.intervals else None

    @property
    def f_end(self):
        return self.intervals[-1][1] if self.intervals else None

    @property
    def span(self) -> float:
        return self.f_end - self.f_ini if self.intervals else 0.0

    @property
    def total_width(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)


@dataclass(frozen=True)
class LinkSolution:
    l_km: float
    c_target: float
    k_level: float
    band: TransmissionBand
    f_ini: float | None
    f_end: float | None
    bandwidth_khz: float
    bandwidth_total_khz: float
    power_linear: float
    power_db: float
    capacity_achieved: float
    f0: float
    truncated: bool = False

    @property
    def k_level_db(self) -> float:
        return 10.0 * math.log10(self.k_level)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["band"] = [list(iv) for iv in self.band.intervals]
        d["k_level_db"] = self.k_level_db
        return {key: (None if isinstance(v, float) and not math.isfinite(v) else v) for key, v in d.items()}


@dataclass
class _Edge:
    f: float
    refined: bool


@dataclass
class _LinkCurve:
    """log10(A N) sampled on the frequency grid for one distance."""

    l: float
    env: EnvironmentParams
    settings: SolverSettings = DEFAULT_SETTINGS
    grid: np.ndarray = field(init=False)
    log_an: np.ndarray = field(init=False)
    i_min: int = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.l) and self.l > 0):
            raise DomainError(f"distance must be finite and > 0, got {self.l!r}")
        self.grid = frequency_grid(self.env)
        self.log_an = log10_an_product(self.l, self.grid, self.env)
        self.i_min = int(np.argmin(self.log_an))

    @property
    def log_min(self) -> float:
        return float(self.log_an[self.i_min])

    @property
    def f0(self) -> float:
        return float(self.grid[self.i_min])

    def _refine(self, i_out: int, i_in: int, log_k: float) -> float:
        """Bisect in log f for log_an == log_k between grid points i_out (above) and i_in (below)."""
        a, b = math.log(self.grid[i_out]), math.log(self.grid[i_in])
        ga, gb = self.log_an[i_out] - log_k, self.log_an[i_in] - log_k
        tol = math.log1p(self.settings.edge_rtol)
        while abs(b - a) > tol:
            m = 0.5 * (a + b)
            gm = log10_an_scalar(self.l, math.exp(m), self.env) - log_k
            if gm > 0:
                a, ga = m, gm
            else:
                b, gb = m, gm
        t = ga / (ga - gb) if ga != gb else 0.5
        return math.exp(a + t * (b - a))

    def edges(self, log_k: float) -> list:
        inside = self.log_an <= log_k
        if not inside.any():
            return []
        padded = np.concatenate(([False], inside, [False])).astype(np.int8)
        d = np.diff(padded)
        starts = np.flatnonzero(d == 1)
        stops = np.flatnonzero(d == -1) - 1
        n = len(self.grid)
        out = []
        for i0, i1 in zip(starts, stops):
            lo = _Edge(self._refine(i0 - 1, i0, log_k), True) if i0 > 0 else _Edge(float(self.grid[0]), False)
            hi = _Edge(self._refine(i1 + 1, i1, log_k), True) if i1 < n - 1 else _Edge(float(self.grid[-1]), False)
            if hi.f <= lo.f:
                # Isolated grid point exactly at the level.
                continue
            out.append((lo, hi))
        return out

    def band(self, log_k: float) -> TransmissionBand:
        return TransmissionBand(tuple((lo.f, hi.f) for lo, hi in self.edges(log_k)))

    def _nodes(self, lo: float, hi: float, log_k: float, lo_is_level: bool, hi_is_level: bool):
        """Integration nodes and log10(AN) values across one interval."""
        i0 = int(np.searchsorted(self.grid, lo, side="right"))
        i1 = int(np.searchsorted(self.grid, hi, side="left"))
        f_mid = self.grid[i0:i1]
        g_mid = self.log_an[i0:i1]
        g_lo = log_k if lo_is_level else log10_an_scalar(self.l, lo, self.env)
        g_hi = log_k if hi_is_level else log10_an_scalar(self.l, hi, self.env)
        f = np.concatenate(([lo], f_mid, [hi]))
        g = np.concatenate(([g_lo], g_mid, [g_hi]))
        return f, np.minimum(g, log_k)

    def _integrate(self, y, x) -> float:
        if self.settings.integration == "simpson" and len(x) >= 3:
            return float(simpson(y, x=x))
        return float(np.trapezoid(y, x))

    def _intervals(self, log_k, band):
        if band is None:
            return [(lo.f, hi.f, lo.refined, hi.refined) for lo, hi in self.edges(log_k)]
        # An externally supplied band: edges at the level only where AN actually meets it.
        return [(lo, hi, False, False) for lo, hi in band.intervals]

    def capacity(self, log_k: float, band: TransmissionBand | None = None) -> float:
        total = 0.0
        for lo, hi, lo_lvl, hi_lvl in self._intervals(log_k, band):
            f, g = self._nodes(lo, hi, log_k, lo_lvl, hi_lvl)
            total += self._integrate((log_k - g) / LOG10_2, f)
        return total

    def power(self, log_k: float, band: TransmissionBand | None = None) -> float:
        """Power integral, computed as K * int(1 - AN/K) df for accuracy near the edges."""
        total = 0.0
        for lo, hi, lo_lvl, hi_lvl in self._intervals(log_k, band):
            f, g = self._nodes(lo, hi, log_k, lo_lvl, hi_lvl)
            total += self._integrate(-np.expm1((g - log_k) * LN10), f)
        return total * 10.0**log_k


def _log_level(k_level: float) -> float:
    if k_level <= 0 or math.isnan(k_level):
        return -math.inf
    return math.log10(k_level)


def band_for_k(l: float, k_level: float, env: EnvironmentParams, settings: SolverSettings = DEFAULT_SETTINGS) -> TransmissionBand:
    """Frequencies where A(l, f) N(f) <= k_level, with edges refined between grid points.

    A level below the minimum of AN gives an empty band.
    """
    return _LinkCurve(l, env, settings).band(_log_level(k_level))


def capacity_for_k(l, k_level, band, env, settings=DEFAULT_SETTINGS) -> float:
    """Capacity in kbit/s of level ``k_level`` over ``band`` (integrand clamped at 0)."""
    if band.is_empty:
        return 0.0
    return _LinkCurve(l, env, settings).capacity(_log_level(k_level), band)


def power_for_k(l, k_level, band, env, settings=DEFAULT_SETTINGS) -> float:
    """Relative transmit power of level ``k_level`` over ``band``."""
    if band.is_empty:
        return 0.0
    return _LinkCurve(l, env, settings).power(_log_level(k_level), band)


def _find_level(curve: _LinkCurve, target: float, settings: SolverSettings) -> float:
    lo = curve.log_min
    cap_log = lo + settings.k_max_db / 10.0

    if settings.mode == "epsilon":
        step = settings.epsilon_db / 10.0
        log_k = lo
        while curve.capacity(log_k) < target:
            log_k += step
            if log_k > cap_log:
                raise CapacityUnreachable(target, curve.capacity(cap_log))
        return log_k

    # Grow the bracket by doubling the dB gap above the minimum.
    below, gap = lo, 0.3
    while True:
        hi = min(lo + gap, cap_log)
        if curve.capacity(hi) >= target:
            break
        if hi >= cap_log:
            raise CapacityUnreachable(target, curve.capacity(cap_log))
        below, gap = hi, 2.0 * gap
    return brentq(lambda x: curve.capacity(x) - target, below, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_link(q: LinkQuery, env: EnvironmentParams, settings: SolverSettings = DEFAULT_SETTINGS) -> LinkSolution:
    """Waterfilling level, band and power achieving ``q.c_target`` at distance ``q.l``."""
    curve = _LinkCurve(q.l, env, settings)
    if q.c_target == 0:
        return LinkSolution(
            l_km=q.l, c_target=0.0, k_level=10.0**curve.log_min, band=TransmissionBand(),
            f_ini=None, f_end=None, bandwidth_khz=0.0, bandwidth_total_khz=0.0,
            power_linear=0.0, power_db=-math.inf, capacity_achieved=0.0, f0=curve.f0,
        )

    log_k = _find_level(curve, q.c_target, settings)
    edges = curve.edges(log_k)
    band = TransmissionBand(tuple((lo.f, hi.f) for lo, hi in edges))
    achieved = curve.capacity(log_k)
    tol = max(settings.capacity_rtol * q.c_target, settings.capacity_atol)
    if settings.mode == "brent" and abs(achieved - q.c_target) > tol:
        raise SolverError(f"level search missed target: {achieved} vs {q.c_target} kbit/s")
    truncated = any(not e.refined for pair in edges for e in pair)
    if truncated:
        log.debug("band for l=%g km, C=%g kbit/s reaches the frequency grid boundary", q.l, q.c_target)
    power = curve.power(log_k)
    return LinkSolution(
        l_km=q.l,
        c_target=q.c_target,
        k_level=10.0**log_k,
        band=band,
        f_ini=band.f_ini,
        f_end=band.f_end,
        bandwidth_khz=band.span,
        bandwidth_total_khz=band.total_width,
        power_linear=power,
        power_db=10.0 * math.log10(power) if power > 0 else -math.inf,
        capacity_achieved=achieved,
        f0=curve.f0,
        truncated=truncated,
    )


def rescale_spreading(sol: LinkSolution, l: float, k_from: float, k_to: float, l_ref_km: float = 1.0) -> LinkSolution:
    """Convert a solution to another spreading factor.

    Changing k multiplies AN by a frequency-independent constant, so the band
    and capacity are unchanged while level and power scale by
    ``(l/l_ref)**(k_to - k_from)``.
    """
    factor = (l / l_ref_km) ** (k_to - k_from)
    return dataclasses.replace(
        sol,
        k_level=sol.k_level * factor,
        power_linear=sol.power_linear * factor,
        power_db=sol.power_db + 10.0 * math.log10(factor),
    )
