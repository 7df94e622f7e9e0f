"""
Volterra integrals M(t) = int_0^t F(t, r) dX(r) of a cadlag driver.

Two independent evaluations are provided:

* ``eval_direct`` sums F(t, tau) * Delta_X(tau) over the jumps and integrates the kernel
  against the drift/diffusion slope;
* ``eval_by_parts`` returns -Y(t) with Y(t) = int_0^t f(t, r) X(r) dr, f = dF/dr. On a
  jump-free stretch of X the r-antiderivative of f is F itself, so the jump part of Y is
  a finite sum of kernel differences.

For a pure-jump driver both are exact and act as oracles for each other. The increment
decomposition Y(t + delta) - Y(t) = J1 + J2 and the two normalised functionals are
computed with ``graded_quad`` so that they can be checked against the exact segment sums.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Iterable, Literal, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import DriverError, QuadratureError
from .drivers import CadlagPath
from .kernels import Kernel, f_delta, g_delta
from .quadrature import graded_quad

logger = logging.getLogger(__name__)

Method = Literal["direct", "by-parts"]
METHODS = ("direct", "by-parts")

# memory cap for the (times x jumps) kernel matrix
_CHUNK = 1 << 20


def _check_times(x: CadlagPath, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0.0) or np.any(t > x.t_end) or np.any(t < x.t_begin):
        raise DriverError(f"evaluation time outside [0, {x.t_end}]")
    return t


def _positive_jumps(x: CadlagPath):
    keep = x.jump_times > 0.0
    return x.jump_times[keep], x.jump_sizes[keep]


def _chunks(t: np.ndarray, width: int):
    step = max(1, _CHUNK // max(width, 1))
    for start in range(0, t.size, step):
        yield slice(start, start + step)


def _has_continuous_part(x: CadlagPath) -> bool:
    return x.drift_rate != 0.0 or x.has_diffusion


def _continuous_slope(x: CadlagPath, t: float):
    knots = x.continuous_knots(0.0, t)
    values = np.asarray(x.continuous_part(knots), dtype=float)
    slopes = np.diff(values) / np.diff(knots)

    def slope_at(r: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(knots, r, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    return knots, slope_at


# ---------------------------------------------------------------------------
# direct evaluation
# ---------------------------------------------------------------------------


def _direct_jumps(k: Kernel, x: CadlagPath, t: np.ndarray) -> np.ndarray:
    taus, sizes = _positive_jumps(x)
    out = np.zeros(t.size)
    if taus.size == 0:
        return out
    for sl in _chunks(t, taus.size):
        tt = t[sl, None]
        # jumps after t are moved onto the diagonal, where F vanishes
        r = np.minimum(taus[None, :], tt)
        values = np.asarray(k.eval(np.broadcast_to(tt, r.shape), r), dtype=float)
        out[sl] = values @ sizes
    return out


def _direct_continuous(k: Kernel, x: CadlagPath, t: float) -> float:
    if t == 0.0:
        return 0.0
    knots, slope_at = _continuous_slope(x, t)

    # u = t - r; F(t, t - u) ~ u**rho at u = 0
    def integrand(u):
        return np.asarray(k.eval_lag(t, u), dtype=float) * slope_at(t - u)

    return graded_quad(
        integrand,
        0.0,
        t,
        exponent=k.rho + 1.0,
        breakpoints=t - knots[1:-1],
        label=f"direct continuous part at t={t:g} ({k.name})",
    ).value


def eval_direct(k: Kernel, x: CadlagPath, t):
    """M(t) as the exact jump sum plus the kernel integrated against the continuous part."""

    t_arr = _check_times(x, t)
    flat = np.atleast_1d(t_arr).ravel()
    out = _direct_jumps(k, x, flat)
    if _has_continuous_part(x):
        out = out + np.array([_direct_continuous(k, x, float(s)) for s in flat])
    out = out.reshape(t_arr.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# integration by parts
# ---------------------------------------------------------------------------


def _segment_y(k: Kernel, x: CadlagPath, t: np.ndarray) -> np.ndarray:
    """Jump part of Y(t): sum over jump-free segments of X(segment) * [F(t, hi) - F(t, lo)]."""

    taus, sizes = _positive_jumps(x)
    levels = np.concatenate(([0.0], np.cumsum(sizes)))
    lows = np.concatenate(([0.0], taus))
    out = np.zeros(t.size)
    for sl in _chunks(t, lows.size + 1):
        tt = t[sl, None]
        edges = np.concatenate((np.minimum(lows[None, :], tt), tt), axis=1)
        values = np.asarray(k.eval(np.broadcast_to(tt, edges.shape), edges), dtype=float)
        out[sl] = np.diff(values, axis=1) @ levels
    return out


def _continuous_y(k: Kernel, x: CadlagPath, t: float) -> float:
    if t == 0.0:
        return 0.0
    knots = x.continuous_knots(0.0, t)

    # u = t - r; f(t, t - u) ~ u**(rho - 1)
    def integrand(u):
        return np.asarray(k.d_dr_lag(t, u), dtype=float) * np.asarray(x.continuous_part(t - u), dtype=float)

    return graded_quad(
        integrand,
        0.0,
        t,
        exponent=k.rho,
        breakpoints=t - knots[1:-1],
        label=f"by-parts continuous part at t={t:g} ({k.name})",
    ).value


def y_value(k: Kernel, x: CadlagPath, t):
    """Y(t) = int_0^t f(t, r) X(r) dr."""

    t_arr = _check_times(x, t)
    flat = np.atleast_1d(t_arr).ravel()
    out = _segment_y(k, x, flat)
    if _has_continuous_part(x):
        out = out + np.array([_continuous_y(k, x, float(s)) for s in flat])
    out = out.reshape(t_arr.shape)
    return float(out) if out.ndim == 0 else out


def eval_by_parts(k: Kernel, x: CadlagPath, t):
    """M(t) = -Y(t); relies on F(t, t) = 0."""

    y = y_value(k, x, t)
    return -y


# ---------------------------------------------------------------------------
# paths and evaluators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolterraPath:
    grid: np.ndarray
    values: np.ndarray
    method: str
    kernel_id: str
    driver_id: str

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid, "value": self.values, "method": self.method})


def evaluate_path(k: Kernel, x: CadlagPath, grid: Sequence[float], method: Method = "direct") -> VolterraPath:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise DriverError("evaluation grid must be a strictly increasing 1-d array")
    if method == "direct":
        values = eval_direct(k, x, grid)
    elif method == "by-parts":
        values = eval_by_parts(k, x, grid)
    else:
        raise ValueError(f"unknown evaluation method {method!r}; expected one of {METHODS}")
    values = np.atleast_1d(values)
    values.setflags(write=False)
    return VolterraPath(grid, values, method, k.name, x.label)


@dataclass(frozen=True)
class VolterraEvaluator:
    """m_eval handle: M(t) for one kernel, driver and method, vectorised over t."""

    kernel: Kernel
    path: CadlagPath
    method: Method = "direct"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown evaluation method {self.method!r}; expected one of {METHODS}")

    def __call__(self, t):
        if self.method == "direct":
            return eval_direct(self.kernel, self.path, t)
        return eval_by_parts(self.kernel, self.path, t)

    def scaled(self, factor: float) -> "VolterraEvaluator":
        return VolterraEvaluator(self.kernel, self.path.scaled(factor), self.method)


# ---------------------------------------------------------------------------
# increment decomposition
# ---------------------------------------------------------------------------


def _check_increment(x: CadlagPath, t: float, delta: float) -> None:
    if not delta > 0:
        raise DriverError(f"delta must be positive, got {delta}")
    if t < 0 or t + delta > x.t_end:
        raise DriverError(f"need 0 <= t and t + delta <= {x.t_end} (t={t}, delta={delta})")


def _jump_breaks(x: CadlagPath, lo: float, hi: float, to_v) -> np.ndarray:
    taus, _ = x.jump_times_in(lo, hi)
    breaks = list(to_v(taus))
    if x.has_diffusion:
        grid = x.diffusion_grid
        breaks.extend(to_v(grid[(grid > lo) & (grid < hi)]))
    return np.asarray(breaks, dtype=float)


def _integrate(func, upper: float, k: Kernel, breakpoints, grading: Optional[float], label: str, t: float, delta: float):
    try:
        return graded_quad(func, 0.0, upper, exponent=k.rho, breakpoints=breakpoints, grading_scale=grading, label=label)
    except QuadratureError as exc:
        exc.context.update(t=t, delta=delta)
        raise


def _j1(k: Kernel, x: CadlagPath, t: float, delta: float) -> float:
    s = t + delta

    def integrand(v):
        u = delta * v
        return np.asarray(k.d_dr_lag(s, u), dtype=float) * np.asarray(x.value(s - u), dtype=float)

    breaks = _jump_breaks(x, t, s, lambda r: (s - r) / delta)
    return delta * _integrate(integrand, 1.0, k, breaks, None, f"J1 ({k.name})", t, delta).value


def _j2(k: Kernel, x: CadlagPath, t: float, delta: float) -> float:
    if t == 0.0:
        return 0.0
    s = t + delta

    def integrand(v):
        u = delta * v
        diff = np.asarray(k.d_dr_lag(s, delta + u), dtype=float) - np.asarray(k.d_dr_lag(t, u), dtype=float)
        return diff * np.asarray(x.value(t - u), dtype=float)

    breaks = _jump_breaks(x, 0.0, t, lambda r: (t - r) / delta)
    return delta * _integrate(integrand, t / delta, k, breaks, 1.0, f"J2 ({k.name})", t, delta).value


@dataclass(frozen=True)
class IncrementDecomposition:
    t: float
    delta: float
    J1: float
    J2: float
    total: float

    def to_record(self) -> dict:
        return asdict(self)


def decompose_increment(k: Kernel, x: CadlagPath, t: float, delta: float) -> IncrementDecomposition:
    """Y(t + delta) - Y(t) split into the near-diagonal part J1 and the kernel-shift part J2."""

    t, delta = float(t), float(delta)
    _check_increment(x, t, delta)
    j1 = _j1(k, x, t, delta)
    j2 = _j2(k, x, t, delta)
    return IncrementDecomposition(t, delta, j1, j2, j1 + j2)


def decompositions_to_frame(rows: Iterable[IncrementDecomposition]) -> pd.DataFrame:
    return pd.DataFrame([r.to_record() for r in rows], columns=["t", "delta", "J1", "J2", "total"])


# ---------------------------------------------------------------------------
# normalised functionals
# ---------------------------------------------------------------------------


def gdelta_functional(k: Kernel, x: CadlagPath, t: float, delta: float) -> float:
    """int_0^{t/delta} g_delta(t, v) X(t - delta v) dv; tends to -X(t-)/rho."""

    t, delta = float(t), float(delta)
    _check_increment(x, t, delta)
    if t == 0.0:
        return 0.0

    def integrand(v):
        return np.asarray(g_delta(k, t, v, delta), dtype=float) * np.asarray(x.value(t - delta * v), dtype=float)

    breaks = _jump_breaks(x, 0.0, t, lambda r: (t - r) / delta)
    return _integrate(integrand, t / delta, k, breaks, 1.0, f"g_delta functional ({k.name})", t, delta).value


def fdelta_functional(k: Kernel, x: CadlagPath, t: float, delta: float) -> float:
    """int_0^1 f_delta(t, v) X(t + delta (1 - v)) dv; tends to X(t)/rho."""

    t, delta = float(t), float(delta)
    _check_increment(x, t, delta)

    def integrand(v):
        return np.asarray(f_delta(k, t, v, delta), dtype=float) * np.asarray(x.value(t + delta * (1.0 - v)), dtype=float)

    s = t + delta
    breaks = _jump_breaks(x, t, s, lambda r: (s - r) / delta)
    return _integrate(integrand, 1.0, k, breaks, None, f"f_delta functional ({k.name})", t, delta).value


@dataclass(frozen=True)
class NormalizedIncrement:
    t: float
    delta: float
    lhs: float
    rhs: float
    phi_f: float
    phi_g: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def normalized_increment(k: Kernel, x: CadlagPath, t: float, delta: float) -> NormalizedIncrement:
    """(M(t+delta) - M(t)) / (delta f(t+delta, t)) next to -(phi_f + phi_g)."""

    t, delta = float(t), float(delta)
    _check_increment(x, t, delta)
    scale = delta * float(k.d_dr_lag(t + delta, delta))
    m = eval_by_parts(k, x, np.array([t, t + delta]))
    phi_f = fdelta_functional(k, x, t, delta)
    phi_g = gdelta_functional(k, x, t, delta)
    return NormalizedIncrement(t, delta, float(m[1] - m[0]) / scale, -(phi_f + phi_g), phi_f, phi_g)


__all__ = [
    "METHODS",
    "IncrementDecomposition",
    "NormalizedIncrement",
    "VolterraEvaluator",
    "VolterraPath",
    "decompose_increment",
    "decompositions_to_frame",
    "eval_by_parts",
    "eval_direct",
    "evaluate_path",
    "fdelta_functional",
    "gdelta_functional",
    "normalized_increment",
    "y_value",
]
