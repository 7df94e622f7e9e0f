"""
Fractional Levy paths from a realised two-sided driver.

The moving-average form

    M_d(t) = 1/Gamma(d) * int [(t - r)_+^(d-1) - (-r)_+^(d-1)] L(r) dr

is split at r = 0 into M1 (the integral over [0, t]) and M2 (the integral over
[-T, 0), truncated at -T). For a pure-jump L both pieces are sums over jump-free
segments of the r-antiderivative. The part of M2 beyond -T is not simulated;
``truncation_tail_bound`` bounds its contribution to increments using a
law-of-the-iterated-logarithm envelope for |L|.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import optimize, special

from ..config import settings
from ..errors import ConfigError, DriverError, QuadratureError
from ..schemas import DriverSpec
from .drivers import CadlagPath, LevyMoments, make_two_sided
from .quadrature import graded_quad

logger = logging.getLogger(__name__)

M2Method = Literal["exact", "quadrature"]

# cap on the (times x segments) work arrays
_BLOCK = 1 << 20


def _check_d(d: float) -> float:
    d = float(d)
    if not 0.0 < d < 0.5:
        raise ConfigError(f"fractional integration parameter d must lie in (0, 0.5), got {d}")
    return d


def lil_epsilon(d: float) -> float:
    """Envelope exponent: the configured epsilon, shrunk so that d + epsilon < 1/2."""

    return min(settings.LIL_EPSILON, (0.5 - d) / 2.0)


def levy_two_sided(spec: DriverSpec, T_neg: float, T_pos: float, stream: int = 0) -> CadlagPath:
    """Two-sided driver whose branches share ``spec`` but use independent streams."""

    return make_two_sided(spec, spec, T_neg, T_pos, fractional=True, stream=stream)


def _power_step(x: np.ndarray, step: float, d: float) -> np.ndarray:
    """(x + step)**d - x**d without cancellation for small step."""

    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    out[pos] = x[pos] ** d * np.expm1(d * np.log1p(step / x[pos]))
    out[~pos] = step**d
    return out


# ---------------------------------------------------------------------------
# M1 / M2
# ---------------------------------------------------------------------------


def _row_blocks(n: int, width: int):
    step = max(1, _BLOCK // max(width, 1))
    for start in range(0, n, step):
        yield slice(start, start + step)


def m1_values(l: CadlagPath, d: float, grid) -> np.ndarray:
    """1/Gamma(d) int_0^t (t - r)^(d-1) L(r) dr, one jump-free segment at a time."""

    d = _check_d(d)
    t = np.atleast_1d(np.asarray(grid, dtype=float))
    keep = l.jump_times > 0.0
    taus, sizes = l.jump_times[keep], l.jump_sizes[keep]
    levels = np.concatenate(([0.0], np.cumsum(sizes)))
    lows = np.concatenate(([0.0], taus))
    out = np.empty(t.size)
    for rows in _row_blocks(t.size, lows.size + 1):
        tt = t[rows, None]
        edges = np.concatenate((np.minimum(lows[None, :], tt), tt), axis=1)
        powers = (tt - edges) ** d
        out[rows] = (powers[:, :-1] - powers[:, 1:]) @ levels
    return out / special.gamma(d + 1.0)


def _negative_segments(l: CadlagPath, T: float):
    taus, _ = l.jump_times_in(-T, 0.0)
    inner = taus[taus < 0.0]
    knots = np.concatenate(([-T], inner, [0.0]))
    levels = np.asarray(l.value(knots[:-1]), dtype=float)
    return knots, levels


def m2_values_exact(l: CadlagPath, d: float, grid, T: float) -> np.ndarray:
    """1/Gamma(d) int_{-T}^0 [(t - r)^(d-1) - (-r)^(d-1)] L(r) dr via segment antiderivatives."""

    d = _check_d(d)
    t = np.atleast_1d(np.asarray(grid, dtype=float))
    knots, levels = _negative_segments(l, T)
    lo, hi = knots[:-1], knots[1:]
    origin = ((-lo) ** d - (-hi) ** d) @ levels
    out = np.empty(t.size)
    for rows in _row_blocks(t.size, lo.size):
        tt = t[rows, None]
        shifted = (tt - lo[None, :]) ** d - (tt - hi[None, :]) ** d
        out[rows] = shifted @ levels - origin
    return out / special.gamma(d + 1.0)


def m2_values_quadrature(l: CadlagPath, d: float, grid, T: float) -> np.ndarray:
    """Same integral through ``graded_quad`` in u = -r, singular like u^(d-1) at u = 0."""

    d = _check_d(d)
    t = np.atleast_1d(np.asarray(grid, dtype=float))
    knots, _ = _negative_segments(l, T)
    breaks = -knots[1:-1]
    out = np.zeros(t.size)
    for i, s in enumerate(t):
        if s == 0.0:
            continue

        def integrand(u, s=s):
            return ((s + u) ** (d - 1.0) - u ** (d - 1.0)) * np.asarray(l.value(-u), dtype=float)

        try:
            out[i] = graded_quad(
                integrand, 0.0, T, exponent=d, breakpoints=breaks, grading_scale=1.0, label=f"M2 at t={s:g}"
            ).value
        except QuadratureError as exc:
            exc.context.update(t=s, d=d, T=T)
            raise
    return out / special.gamma(d)


# ---------------------------------------------------------------------------
# truncation error model
# ---------------------------------------------------------------------------


def _lil_factor(start: float, epsilon: float) -> float:
    """sup over u >= max(start, e^e) of sqrt(2 log log u) * u^(-epsilon)."""

    def log_phi(s: float) -> float:
        # s = log u
        return 0.5 * math.log(2.0 * math.log(s)) - epsilon * s

    s0 = max(math.log(start), math.e)
    target = 1.0 / (2.0 * epsilon)
    if s0 * math.log(s0) >= target:
        return math.exp(log_phi(s0))
    hi = max(2.0 * s0, 2.0 * target)
    s_star = optimize.brentq(lambda s: s * math.log(s) - target, s0, hi)
    return math.exp(log_phi(s_star))


def truncation_tail_bound(
    stats: LevyMoments,
    d: float,
    t: float,
    T: float,
    delta_max: float,
    epsilon: Optional[float] = None,
) -> float:
    """Bound on |tail(t + delta) - tail(t)| for |delta| <= delta_max, tail = the part beyond -T.

    |L(-u)| is bounded by 2 * sigma * sqrt(2 u log log u) <= C u^(1/2 + epsilon), the kernel
    difference by (1 - d) |delta| (u/2)^(d-2) once T >= 2(|t| + delta_max); integrating from T
    to infinity gives a bound linear in delta_max.
    """

    d = _check_d(d)
    if delta_max < 0:
        raise ConfigError(f"delta_max must be nonnegative, got {delta_max}")
    if not T >= 2.0 * (abs(t) + delta_max) or not T > 0:
        raise ConfigError(f"truncation T={T:g} must be at least 2(|t| + delta_max) = {2.0 * (abs(t) + delta_max):g}")
    eps = lil_epsilon(d) if epsilon is None else float(epsilon)
    if not 0.0 < eps < 0.5 - d:
        raise ConfigError(f"envelope exponent must lie in (0, {0.5 - d:g}), got {eps}")
    if delta_max == 0:
        return 0.0

    envelope = 2.0 * stats.scale * _lil_factor(T, eps)
    tail = T ** (d - 0.5 + eps) / (0.5 - d - eps)
    return envelope * (1.0 - d) * 2.0 ** (2.0 - d) * delta_max * tail / special.gamma(d)


def default_truncation(
    stats: LevyMoments,
    d: float,
    t_max: float,
    delta_max: float,
    target: Optional[float] = None,
    max_T: Optional[float] = None,
) -> float:
    """Smallest dyadic T meeting bound <= target * sqrt(E[L(1)^2]); the cap when none does."""

    d = _check_d(d)
    target = settings.FRACLEVY_TAIL_TARGET if target is None else target
    max_T = settings.FRACLEVY_MAX_T if max_T is None else max_T
    floor = 2.0 * (abs(t_max) + delta_max)
    if floor > max_T:
        raise ConfigError(f"truncation cap {max_T:g} is below the minimum admissible T={floor:g}")

    T = 2.0 ** math.ceil(math.log2(max(floor, 1.0)))
    goal = target * stats.scale
    while T <= max_T:
        if truncation_tail_bound(stats, d, t_max, T, delta_max) <= goal:
            return float(T)
        T *= 2.0
    logger.warning(
        "[Fraclevy] tail target %.3g not reachable below T=%g (d=%g); using the cap, bound=%.3g",
        goal,
        max_T,
        d,
        truncation_tail_bound(stats, d, t_max, max_T, delta_max),
    )
    return float(max_T)


def tail_increment(l: CadlagPath, d: float, t: float, a: float, delta) -> np.ndarray:
    """int_{t_begin}^{a} [(t + delta - r)^(d-1) - (t - r)^(d-1)] L(r) dr, exact per segment."""

    d = _check_d(d)
    if not l.t_begin < a < t:
        raise DriverError(f"need t_begin < a < t (t_begin={l.t_begin}, a={a}, t={t})")
    deltas = np.atleast_1d(np.asarray(delta, dtype=float))
    if np.any(deltas <= 0):
        raise ConfigError("tail increments need positive delta")
    taus, _ = l.jump_times_in(l.t_begin, a)
    inner = taus[taus < a]
    knots = np.concatenate(([l.t_begin], inner, [a]))
    levels = np.asarray(l.value(knots[:-1]), dtype=float)
    lo, hi = knots[:-1], knots[1:]
    out = np.empty(deltas.size)
    for i, step in enumerate(deltas):
        seg = _power_step(t - lo, step, d) - _power_step(t - hi, step, d)
        out[i] = float(seg @ levels) / d
    return out


# ---------------------------------------------------------------------------
# path assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FracLevyPath:
    d: float
    grid: np.ndarray
    values: np.ndarray
    m1_values: np.ndarray
    m2_values: np.ndarray
    truncation_T: float
    truncation_bound: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid, "M": self.values, "M1": self.m1_values, "M2": self.m2_values})


def eval_fraclevy(
    l: CadlagPath,
    d: float,
    grid: Sequence[float],
    T: Optional[float] = None,
    *,
    m2_method: M2Method = "exact",
    stats: Optional[LevyMoments] = None,
) -> FracLevyPath:
    """M_d = M1 + M2 on ``grid`` from a realised two-sided pure-jump driver."""

    d = _check_d(d)
    grid = np.array(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise DriverError("grid must be a non-empty strictly increasing 1-d array")
    if grid[0] < 0 or grid[-1] > l.t_end:
        raise DriverError(f"grid must lie in [0, {l.t_end}]")
    if not l.is_pure_jump:
        raise DriverError("fractional Levy paths need a pure-jump driver (no drift, no Brownian part)")
    T = -l.t_begin if T is None else float(T)
    if not 0 < T <= -l.t_begin:
        raise DriverError(f"driver horizon starts at {l.t_begin}; cannot truncate at -{T:g}")

    m1 = m1_values(l, d, grid)
    if m2_method == "exact":
        m2 = m2_values_exact(l, d, grid, T)
    elif m2_method == "quadrature":
        m2 = m2_values_quadrature(l, d, grid, T)
    else:
        raise ValueError(f"unknown m2_method {m2_method!r}")

    bound = math.nan
    t_max = float(grid[-1])
    if stats is not None:
        if T >= 4.0 * t_max:
            bound = truncation_tail_bound(stats, d, t_max, T, t_max)
        else:
            logger.warning("[Fraclevy] T=%g too short for the tail bound at t_max=%g", T, t_max)

    values = m1 + m2
    for arr in (grid, values, m1, m2):
        arr.setflags(write=False)
    logger.debug("[Fraclevy] d=%g, %s grid points, T=%g, bound=%.3g", d, grid.size, T, bound)
    return FracLevyPath(d, grid, values, m1, m2, T, bound)


__all__ = [
    "FracLevyPath",
    "default_truncation",
    "eval_fraclevy",
    "levy_two_sided",
    "lil_epsilon",
    "m1_values",
    "m2_values_exact",
    "m2_values_quadrature",
    "tail_increment",
    "truncation_tail_bound",
]
