"""
Regularity diagnostics on evaluated paths.

* ``pointwise_ratio_scan``: (M(s+h) - M(s)) / F(s+h, s) per probe and h, to be compared
  with the driver jump at s;
* ``uniform_modulus_scan``: sup over pairs |t - s| <= h of |M(t) - M(s)| / F(t, s), to be
  compared with the largest jump;
* ``holder_exponent``: log-log slope of the global modulus of continuity over dyadic lags.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats
from scipy.stats import qmc

from ..errors import DiagnosticError
from .drivers import CadlagPath, make_generator, sup_jump
from .kernels import Kernel

logger = logging.getLogger(__name__)

MEval = Callable[[np.ndarray], np.ndarray]

# straddle pairs stop just short of tau + h
STRADDLE_SHRINK = 1.0 - 1e-9

# spawn key of the scrambling stream, kept apart from driver streams
SOBOL_STREAM = 0x50B0


def _schedule(h_schedule: Sequence[float]) -> np.ndarray:
    h = np.asarray(h_schedule, dtype=float)
    if h.ndim != 1 or h.size == 0:
        raise DiagnosticError("h_schedule must be a non-empty 1-d sequence")
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise DiagnosticError("h_schedule must be positive and strictly decreasing")
    return h


def richardson_limit(h: Sequence[float], ratios, order: float = 1.0) -> np.ndarray:
    """Two-point extrapolation to h = 0 assuming ratio(h) = limit + c * h**order.

    ``h`` holds the last two step sizes (larger first); ``ratios`` has them on its last axis.
    """

    h1, h2 = (float(v) for v in h)
    if not h1 > h2 > 0:
        raise DiagnosticError(f"need h1 > h2 > 0, got {h1}, {h2}")
    r = np.asarray(ratios, dtype=float)
    a, b = h1**order, h2**order
    return (a * r[..., 1] - b * r[..., 0]) / (a - b)


# ---------------------------------------------------------------------------
# pointwise
# ---------------------------------------------------------------------------


@dataclass
class PointwiseScan:
    probes: np.ndarray
    h_schedule: np.ndarray
    ratios: np.ndarray  # (probe, h)
    raw_limit: np.ndarray
    extrapolated: np.ndarray
    rate_extrapolated: np.ndarray
    truth: np.ndarray
    sup_norm: float

    @property
    def at_jump(self) -> np.ndarray:
        return self.truth != 0.0

    def errors(self) -> np.ndarray:
        return np.abs(self.extrapolated - self.truth)

    def to_frame(self) -> pd.DataFrame:
        n_probe, n_h = self.ratios.shape
        return pd.DataFrame(
            {
                "probe": np.repeat(self.probes, n_h),
                "h": np.tile(self.h_schedule, n_probe),
                "ratio": self.ratios.ravel(),
                "truth": np.repeat(self.truth, n_h),
            }
        )

    def limits_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "probe": self.probes,
                "truth": self.truth,
                "raw": self.raw_limit,
                "richardson": self.extrapolated,
                "richardson_rate": self.rate_extrapolated,
            }
        )


def pointwise_ratio_scan(
    k: Kernel,
    x: CadlagPath,
    m_eval: MEval,
    probes: Sequence[float],
    h_schedule: Sequence[float],
) -> PointwiseScan:
    h = _schedule(h_schedule)
    s = np.asarray(probes, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise DiagnosticError("probes must be a non-empty 1-d sequence")
    if np.any(s <= 0) or np.any(s + h[0] > x.t_end):
        raise DiagnosticError(f"probes must lie in (0, {x.t_end - h[0]:g}] so that s + max(h) stays in the horizon")

    base = np.asarray(m_eval(s), dtype=float)
    ratios = np.empty((s.size, h.size))
    for j, hj in enumerate(h):
        ahead = np.asarray(m_eval(s + hj), dtype=float)
        ratios[:, j] = (ahead - base) / np.asarray(k.eval(s + hj, s), dtype=float)

    raw = ratios[:, -1].copy()
    if h.size >= 2:
        extrapolated = richardson_limit(h[-2:], ratios[:, -2:])
        rate = richardson_limit(h[-2:], ratios[:, -2:], order=1.0 - k.rho)
    else:
        extrapolated = raw.copy()
        rate = raw.copy()
    truth = np.atleast_1d(np.asarray(x.jump(s), dtype=float))
    return PointwiseScan(s, h, ratios, raw, extrapolated, rate, truth, x.sup_norm((0.0, x.t_end)))


# ---------------------------------------------------------------------------
# uniform
# ---------------------------------------------------------------------------


@dataclass
class UniformScan:
    h_schedule: np.ndarray
    uniform_ratios: np.ndarray
    sup_jump: float
    pair_count: np.ndarray
    argmax_pairs: np.ndarray  # (h, 2)

    def relative_gap(self) -> np.ndarray:
        if self.sup_jump == 0.0:
            return np.abs(self.uniform_ratios)
        return np.abs(self.uniform_ratios - self.sup_jump) / self.sup_jump

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"h": self.h_schedule, "uniform_ratio": self.uniform_ratios, "sup_jump": self.sup_jump}
        )


def sobol_pairs(count: int, seed: int = 0) -> np.ndarray:
    """First ``count`` points of a scrambled 2-d Sobol stream; a longer stream extends a shorter one."""

    m = max(0, math.ceil(math.log2(max(count, 1))))
    engine = qmc.Sobol(d=2, scramble=True, seed=make_generator(seed, SOBOL_STREAM))
    return engine.random_base2(m)[:count]


def uniform_modulus_scan(
    k: Kernel,
    x: CadlagPath,
    m_eval: MEval,
    h_schedule: Sequence[float],
    pair_budget: int = 1000,
    *,
    interval: Tuple[float, float] = (0.0, 1.0),
    seed: int = 0,
) -> UniformScan:
    """sup of |M(t) - M(s)| / F(t, s) over jump straddles and a quasi-random pair set."""

    h = _schedule(h_schedule)
    if pair_budget < 1000:
        raise DiagnosticError(f"pair_budget must be at least 1000, got {pair_budget}")
    a, b = float(interval[0]), float(interval[1])
    if not 0.0 <= a < b <= x.t_end:
        raise DiagnosticError(f"interval [{a}, {b}] must lie inside [0, {x.t_end}]")
    if h[0] >= b - a:
        raise DiagnosticError(f"largest h ({h[0]:g}) must be below the interval width")

    taus, _ = x.jump_times_in(a, b)
    taus = taus[taus < b]
    if a in x.jump_times:
        taus = np.concatenate(([a], taus))
    unit = sobol_pairs(pair_budget, seed)
    # lags are kept away from zero so that F(t, s) > 0
    lag_frac = np.clip(unit[:, 1], 1e-9, 1.0)

    sups = np.zeros(h.size)
    counts = np.zeros(h.size, dtype=int)
    argmax = np.full((h.size, 2), np.nan)
    for j, hj in enumerate(h):
        s_q = a + (b - a - hj) * unit[:, 0]
        t_q = s_q + hj * lag_frac
        s = np.concatenate((taus, s_q))
        t = np.concatenate((np.minimum(taus + hj * STRADDLE_SHRINK, b), t_q))
        ok = t > s
        s, t = s[ok], t[ok]
        values = np.abs(np.asarray(m_eval(t), dtype=float) - np.asarray(m_eval(s), dtype=float))
        ratios = values / np.asarray(k.eval(t, s), dtype=float)
        best = int(np.argmax(ratios))
        sups[j] = float(ratios[best])
        counts[j] = s.size
        argmax[j] = (s[best], t[best])
        logger.debug("[Regdiag] h=%g: sup ratio %.6g over %s pairs", hj, sups[j], s.size)

    return UniformScan(h, sups, sup_jump(x, (a, b)), counts, argmax)


# ---------------------------------------------------------------------------
# Hoelder exponent
# ---------------------------------------------------------------------------


@dataclass
class HolderFit:
    levels: np.ndarray
    h: np.ndarray
    modulus: np.ndarray
    slope: Optional[float]
    r2: Optional[float]
    intercept: Optional[float] = None

    @property
    def degenerate(self) -> bool:
        return self.slope is None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "level": self.levels,
                "h": self.h,
                "modulus": self.modulus,
                "slope": np.nan if self.slope is None else self.slope,
                "r2": np.nan if self.r2 is None else self.r2,
            }
        )


def dyadic_modulus(values: np.ndarray, levels: Sequence[int]) -> np.ndarray:
    """w(2^k steps) = max over index pairs at most 2^k apart of |v_i - v_j|."""

    v = np.asarray(values, dtype=float)
    wanted = sorted(set(int(k) for k in levels))
    out: Dict[int, float] = {}
    hi, lo = v.copy(), v.copy()  # windows of 2^k points
    k = 0
    while wanted and k <= wanted[-1]:
        if k in wanted:
            top = np.maximum(hi[:-1], hi[1:])
            bottom = np.minimum(lo[:-1], lo[1:])
            out[k] = float(np.max(top - bottom))
        step = 1 << k
        hi = np.maximum(hi[:-step], hi[step:])
        lo = np.minimum(lo[:-step], lo[step:])
        k += 1
    return np.array([out[int(k)] for k in levels])


def holder_exponent(
    path_values: Sequence[float],
    dyadic_levels: int = 6,
    *,
    min_level: int = 2,
    dt: Optional[float] = None,
) -> HolderFit:
    """Regress log w(h) on log h over lags 2^min_level ... 2^(min_level + dyadic_levels - 1) steps."""

    v = np.asarray(path_values, dtype=float)
    if v.ndim != 1:
        raise DiagnosticError("path_values must be a 1-d array on a uniform grid")
    if dyadic_levels < 5:
        raise DiagnosticError(f"a Hoelder fit needs at least 5 dyadic levels, got {dyadic_levels}")
    if min_level < 0:
        raise DiagnosticError(f"min_level must be nonnegative, got {min_level}")
    levels = np.arange(min_level, min_level + dyadic_levels)
    if v.size <= (1 << int(levels[-1])):
        raise DiagnosticError(f"{v.size} grid points do not resolve a lag of 2^{levels[-1]} steps")
    dt = 1.0 / (v.size - 1) if dt is None else float(dt)

    modulus = dyadic_modulus(v, levels)
    h = dt * 2.0 ** levels
    if np.any(modulus <= 0) or not np.all(np.isfinite(modulus)):
        logger.warning("[Regdiag] Hoelder fit is degenerate: the path is constant at some lag")
        return HolderFit(levels, h, modulus, None, None)
    fit = stats.linregress(np.log(h), np.log(modulus))
    return HolderFit(levels, h, modulus, float(fit.slope), float(fit.rvalue**2), float(fit.intercept))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class RegularityReport:
    h_schedule: np.ndarray
    pointwise: Optional[PointwiseScan] = None
    uniform: Optional[UniformScan] = None
    holder: Optional[HolderFit] = None
    notes: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for scan in (self.pointwise, self.uniform):
            if scan is not None and scan.h_schedule.size != len(self.h_schedule):
                raise DiagnosticError("scan arrays must conform to h_schedule")

    @property
    def holder_slope(self) -> Optional[float]:
        return None if self.holder is None else self.holder.slope

    def to_frames(self) -> Dict[str, pd.DataFrame]:
        frames: Dict[str, pd.DataFrame] = {}
        if self.pointwise is not None:
            frames["pointwise"] = self.pointwise.to_frame()
        if self.uniform is not None:
            frames["uniform"] = self.uniform.to_frame()
        if self.holder is not None:
            frames["holder"] = self.holder.to_frame()
        return frames


__all__ = [
    "HolderFit",
    "PointwiseScan",
    "RegularityReport",
    "UniformScan",
    "dyadic_modulus",
    "holder_exponent",
    "pointwise_ratio_scan",
    "richardson_limit",
    "sobol_pairs",
    "uniform_modulus_scan",
]
