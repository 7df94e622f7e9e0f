"""
Kernels F(t, r) on E = {(t, r): r <= t} and their smooth-variation diagnostics.

A kernel of smooth variation of index rho behaves like (t - r)**rho at the diagonal:
the scaled ratios of its partials converge to -rho, rho, -rho(rho-1) and rho(rho-1)
uniformly on compacts as h -> 0. ``check_smooth_variation`` measures those ratios on a
shrinking h-schedule; ``gdelta_integral_diagnostics`` and ``fdelta_integral_diagnostics``
measure the integral limits behind the pointwise jump ratio.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import special

from ..config import settings
from ..errors import ConfigError, KernelDomainError, KernelInvariantError, QuadratureError
from .quadrature import graded_quad

logger = logging.getLogger(__name__)

# Power-log kernels are positive only while |log(t - r)| > 0.
LOG_DOMAIN_EDGE = 1.0 - 1e-9

# Residual jitter tolerated by the "non-increasing" half of the verdict rule.
NOISE_FLOOR = 1e-12

DEFAULT_SV_TOL = 0.1

CONDITIONS = ("a", "b", "c", "d")


def _as_out(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise ConfigError(f"rho must lie in the open interval (0, 1), got {rho}")
    return rho


class Kernel:
    """Base kernel. Subclasses override ``_value`` and, when they can, the analytic partials.

    Partials that are not overridden fall back to central finite differences of ``eval``
    with step ``max(FD_MIN_STEP, FD_REL_STEP * (t - r))``, capped at (t - r)/4 so that no
    stencil point crosses the diagonal.
    """

    kind: str = "user-defined"

    def __init__(self, rho: float, name: Optional[str] = None):
        self._rho = _check_rho(rho)
        self.name = name or f"{self.kind}(rho={self._rho:g})"

    @property
    def index_rho(self) -> float:
        return self._rho

    @property
    def rho(self) -> float:
        return self._rho

    def __repr__(self) -> str:
        return f"<Kernel {self.name}>"

    # -- lag handling -------------------------------------------------------------

    def _max_lag(self) -> float:
        return math.inf

    def _check_lag(self, u, *, open_diagonal: bool) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if open_diagonal:
            if np.any(~(u > 0)):
                raise KernelDomainError(f"{self.name}: partials need r < t (min t - r = {np.min(u):.3g})")
        elif np.any(~(u >= 0)):
            raise KernelDomainError(f"{self.name}: kernel is defined for r <= t only (min t - r = {np.min(u):.3g})")
        if np.any(u >= self._max_lag()):
            raise KernelDomainError(
                f"{self.name}: t - r must stay below {self._max_lag():.12g} (max t - r = {np.max(u):.6g})"
            )
        return u

    def _lag(self, t, r, *, open_diagonal: bool) -> np.ndarray:
        return self._check_lag(np.asarray(t, dtype=float) - np.asarray(r, dtype=float), open_diagonal=open_diagonal)

    # -- lag-form values and partials -----------------------------------------------
    # Subclasses work on (t, u) with u = t - r. Integrators pass u directly, since
    # r = t - u rounds back onto the diagonal for the smallest graded nodes.

    def _value(self, t: np.ndarray, u: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def _fd_step(self, u: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(settings.FD_MIN_STEP, settings.FD_REL_STEP * u), u / 4.0)

    def _d_dr(self, t, u):
        s = self._fd_step(u)
        return (self._value(t, u - s) - self._value(t, u + s)) / (2 * s)

    def _d_dt(self, t, u):
        s = self._fd_step(u)
        return (self._value(t + s, u + s) - self._value(t - s, u - s)) / (2 * s)

    def _d2_dtdr(self, t, u):
        s = self._fd_step(u)
        return (
            self._value(t + s, u)
            - self._value(t + s, u + 2 * s)
            - self._value(t - s, u - 2 * s)
            + self._value(t - s, u)
        ) / (4 * s * s)

    def _d2_dr2(self, t, u):
        s = self._fd_step(u)
        return (self._value(t, u - s) - 2 * self._value(t, u) + self._value(t, u + s)) / (s * s)

    def _apply(self, fn, t, u, *, open_diagonal: bool = True):
        u = self._check_lag(u, open_diagonal=open_diagonal)
        t_arr, u_arr = np.broadcast_arrays(np.asarray(t, dtype=float), u)
        return _as_out(fn(t_arr, u_arr))

    @staticmethod
    def _lag_of(t, r) -> np.ndarray:
        return np.asarray(t, dtype=float) - np.asarray(r, dtype=float)

    # -- public surface -------------------------------------------------------------

    def eval(self, t, r):
        """F(t, r)."""

        return self._apply(self._value, t, self._lag_of(t, r), open_diagonal=False)

    __call__ = eval

    def eval_lag(self, t, u):
        """F(t, t - u) for lags u >= 0."""

        return self._apply(self._value, t, u, open_diagonal=False)

    def d_dr(self, t, r):
        """f(t, r) = F^{(0,1)}(t, r)."""

        return self._apply(self._d_dr, t, self._lag_of(t, r))

    def d_dr_lag(self, t, u):
        """f(t, t - u) for lags u > 0."""

        return self._apply(self._d_dr, t, u)

    def d_dt(self, t, r):
        """F^{(1,0)}(t, r)."""

        return self._apply(self._d_dt, t, self._lag_of(t, r))

    def d2_dtdr(self, t, r):
        """F^{(1,1)}(t, r)."""

        return self._apply(self._d2_dtdr, t, self._lag_of(t, r))

    def d2_dr2(self, t, r):
        """F^{(0,2)}(t, r)."""

        return self._apply(self._d2_dr2, t, self._lag_of(t, r))

    def fdelta_zero_limit(self) -> Optional[float]:
        """Limit of f_delta(t, v) as v -> 0, when known analytically."""

        return None


class PowerKernel(Kernel):
    """F(t, r) = scale * (t - r)**rho."""

    kind = "power"

    def __init__(self, rho: float, scale: float = 1.0, name: Optional[str] = None):
        if not scale > 0:
            raise ConfigError(f"kernel scale must be positive, got {scale}")
        self.scale = float(scale)
        super().__init__(rho, name)

    def _value(self, t, u):
        return self.scale * u**self._rho

    def _d_dr(self, t, u):
        return -self.scale * self._rho * u ** (self._rho - 1)

    def _d_dt(self, t, u):
        return self.scale * self._rho * u ** (self._rho - 1)

    def _d2_dtdr(self, t, u):
        rho = self._rho
        return -self.scale * rho * (rho - 1) * u ** (rho - 2)

    def _d2_dr2(self, t, u):
        rho = self._rho
        return self.scale * rho * (rho - 1) * u ** (rho - 2)

    def fdelta_zero_limit(self) -> Optional[float]:
        return math.inf


class PowerLogKernel(Kernel):
    """F(t, r) = scale * (t - r)**rho * |log(t - r)|**eta on 0 <= t - r < 1."""

    kind = "power-log"

    def __init__(self, rho: float, eta: float, scale: float = 1.0, name: Optional[str] = None):
        if not scale > 0:
            raise ConfigError(f"kernel scale must be positive, got {scale}")
        self.eta = float(eta)
        self.scale = float(scale)
        rho = _check_rho(rho)
        super().__init__(rho, name or f"power-log(rho={rho:g}, eta={self.eta:g})")

    def _max_lag(self) -> float:
        return LOG_DOMAIN_EDGE

    def _value(self, t, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0
        up = u[pos]
        out[pos] = self.scale * up**self._rho * (-np.log(up)) ** self.eta
        return out

    def _first(self, u: np.ndarray) -> np.ndarray:
        rho, eta = self._rho, self.eta
        log_abs = -np.log(u)
        return self.scale * u ** (rho - 1) * (rho * log_abs**eta - eta * log_abs ** (eta - 1))

    def _second(self, u: np.ndarray) -> np.ndarray:
        rho, eta = self._rho, self.eta
        log_abs = -np.log(u)
        bracket = (
            (rho - 1) * (rho * log_abs**eta - eta * log_abs ** (eta - 1))
            - rho * eta * log_abs ** (eta - 1)
            + eta * (eta - 1) * log_abs ** (eta - 2)
        )
        return self.scale * u ** (rho - 2) * bracket

    def _d_dr(self, t, u):
        return -self._first(u)

    def _d_dt(self, t, u):
        return self._first(u)

    def _d2_dtdr(self, t, u):
        return -self._second(u)

    def _d2_dr2(self, t, u):
        return self._second(u)

    def fdelta_zero_limit(self) -> Optional[float]:
        return math.inf


class CallableKernel(Kernel):
    """User-defined kernel given as a function of (t, r); partials by finite differences."""

    kind = "user-defined"

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray], rho: float, name: Optional[str] = None):
        self._func = func
        super().__init__(rho, name)

    def _value(self, t, u):
        return np.asarray(self._func(t, t - u), dtype=float)


def make_power_kernel(rho: float) -> PowerKernel:
    return PowerKernel(rho)


def make_power_log_kernel(rho: float, eta: float) -> PowerLogKernel:
    return PowerLogKernel(rho, eta)


def make_fractional_kernel(d: float) -> PowerKernel:
    """The fractional Levy kernel on r >= 0: (t - r)**d / Gamma(d + 1)."""

    d = float(d)
    if not 0.0 < d < 0.5:
        raise ConfigError(f"fractional integration parameter d must lie in (0, 0.5), got {d}")
    return PowerKernel(d, scale=1.0 / special.gamma(d + 1.0), name=f"fractional(d={d:g})")


def make_callable_kernel(func: Callable, rho: float, name: Optional[str] = None) -> CallableKernel:
    return CallableKernel(func, rho, name)


def make_oscillating_kernel(rho: float = 0.3) -> CallableKernel:
    """F(t, r) = (t - r)**rho * (2 + sin(1/(t - r))): positive, but not smoothly varying."""

    def _osc(t, r):
        u = np.asarray(t - r, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = u[pos] ** rho * (2.0 + np.sin(1.0 / u[pos]))
        return out

    return CallableKernel(_osc, rho, name=f"oscillating(rho={rho:g})")


def kernel_from_config(config) -> Kernel:
    """Build a kernel from a ``KernelConfig`` record."""

    if config.kind == "power":
        return make_power_kernel(config.rho)
    if config.kind == "power-log":
        return make_power_log_kernel(config.rho, config.eta)
    if config.kind == "fractional":
        return make_fractional_kernel(config.rho)
    if config.kind == "oscillating":
        return make_oscillating_kernel(config.rho)
    raise ConfigError(f"unknown kernel kind {config.kind!r}")


# ---------------------------------------------------------------------------
# structural checks
# ---------------------------------------------------------------------------


@dataclass
class PartialsReport:
    kernel: str
    lags: np.ndarray
    max_rel_error: Dict[str, float]
    diagonal_zero: bool
    positive: bool

    def ok(self, rtol: float = 1e-6) -> bool:
        return self.diagonal_zero and self.positive and all(e <= rtol for e in self.max_rel_error.values())


def check_partials(k: Kernel, t: float = 1.5, lags: Optional[Sequence[float]] = None) -> PartialsReport:
    """Compare each partial with a central difference of ``eval`` at the given lags t - r."""

    if lags is None:
        hi = min(1.0, 0.9 if isinstance(k, PowerLogKernel) else 1.0)
        lags = np.geomspace(1e-3, hi, 16)
    u = np.asarray(lags, dtype=float)
    r = t - u

    def F(tt, rr):
        return np.asarray(k.eval(tt, rr), dtype=float)

    s1 = 1e-5 * u
    s2 = 1e-4 * u
    fd = {
        "d_dr": (F(t, r + s1) - F(t, r - s1)) / (2 * s1),
        "d_dt": (F(t + s1, r) - F(t - s1, r)) / (2 * s1),
        "d2_dr2": (F(t, r + s2) - 2 * F(t, r) + F(t, r - s2)) / (s2 * s2),
        "d2_dtdr": (F(t + s2, r + s2) - F(t + s2, r - s2) - F(t - s2, r + s2) + F(t - s2, r - s2)) / (4 * s2 * s2),
    }
    # Partials of power-log kernels change sign inside the probe range, so errors are
    # measured against the natural magnitude |F|/u (first order) or |F|/u**2 (second order).
    value = F(t, r)
    errors: Dict[str, float] = {}
    for name, approx in fd.items():
        exact = np.asarray(getattr(k, name)(t, r), dtype=float)
        natural = np.abs(value) / (u if name in ("d_dr", "d_dt") else u * u)
        errors[name] = float(np.max(np.abs(exact - approx) / np.maximum(np.abs(exact), natural)))

    diagonal = np.array([0.1, 0.5, 1.0, 2.0])
    diagonal_zero = bool(np.all(np.asarray(k.eval(diagonal, diagonal)) == 0.0))
    positive = bool(np.all(value > 0))
    return PartialsReport(k.name, u, errors, diagonal_zero, positive)


# ---------------------------------------------------------------------------
# smooth variation
# ---------------------------------------------------------------------------


def sup_grid(lo: float, hi: float, points: Optional[int] = None) -> np.ndarray:
    """Uniform interior grid of ``points`` nodes plus both endpoints."""

    n = settings.SUP_GRID_POINTS if points is None else points
    if hi < lo:
        raise ConfigError(f"interval [{lo}, {hi}] is empty")
    if hi == lo:
        return np.array([lo])
    interior = lo + (hi - lo) * np.arange(1, n + 1) / (n + 1)
    return np.concatenate(([lo], interior, [hi]))


def _check_schedule(schedule: Sequence[float], name: str, minimum: int = 1) -> np.ndarray:
    h = np.asarray(schedule, dtype=float)
    if h.ndim != 1 or h.size < minimum:
        raise ConfigError(f"{name} needs at least {minimum} values")
    if np.any(h <= 0):
        raise ConfigError(f"{name} values must be positive")
    if np.any(np.diff(h) >= 0):
        raise ConfigError(f"{name} must be strictly decreasing")
    return h


def verdict(residuals: np.ndarray, tol: float) -> bool:
    """Pass iff the two smallest-h residuals are below tol and the last three do not increase."""

    res = np.asarray(residuals, dtype=float)
    if res.size < 3 or not np.all(np.isfinite(res[-3:])):
        return False
    below = res[-1] < tol and res[-2] < tol
    settling = res[-2] <= res[-3] + NOISE_FLOOR and res[-1] <= res[-2] + NOISE_FLOOR
    return bool(below and settling)


def non_increasing(residuals: np.ndarray) -> bool:
    res = np.asarray(residuals, dtype=float)
    return bool(np.all(np.isfinite(res)) and np.all(np.diff(res) <= NOISE_FLOOR))


@dataclass
class SmoothVariationReport:
    kernel: str
    h_schedule: np.ndarray
    condition_residuals: Dict[str, np.ndarray]
    ratio_residual: np.ndarray
    verdict: Dict[str, bool]
    reasons: Dict[str, str] = field(default_factory=dict)
    tol: float = DEFAULT_SV_TOL

    @property
    def passed(self) -> bool:
        return all(self.verdict[c] for c in CONDITIONS)

    def to_frame(self) -> pd.DataFrame:
        res = self.condition_residuals
        return pd.DataFrame(
            {
                "h": self.h_schedule,
                "res_a": res["a"],
                "res_b": res["b"],
                "res_c": res["c"],
                "res_d": res["d"],
                "res_eq39": self.ratio_residual,
            }
        )


def _sv_residual(k: Kernel, cond: str, t: np.ndarray, h: float) -> np.ndarray:
    rho = k.rho
    # ratios use the realised lag t - r, not the nominal h
    if cond == "b":
        s = t + h
        lag = s - t
        return np.abs(lag * k.d_dt(s, t) / k.eval(s, t) - rho)
    r = t - h
    lag = t - r
    F = k.eval(t, r)
    if cond == "a":
        return np.abs(lag * k.d_dr(t, r) / F + rho)
    if cond == "c":
        return np.abs(lag * lag * k.d2_dtdr(t, r) / F + rho * (rho - 1))
    if cond == "d":
        return np.abs(lag * lag * k.d2_dr2(t, r) / F - rho * (rho - 1))
    if cond == "ratio":
        return np.abs(F / (lag * k.d_dr(t, r)) + 1.0 / rho)
    raise ValueError(cond)


def check_smooth_variation(
    k: Kernel,
    K_interval: Sequence[float],
    h_schedule: Sequence[float],
    tol: float = DEFAULT_SV_TOL,
    points: Optional[int] = None,
) -> SmoothVariationReport:
    """Residuals of the four smooth-variation conditions and of the F/(h f) ratio, sup over K."""

    t_lo, t_hi = float(K_interval[0]), float(K_interval[1])
    h = _check_schedule(h_schedule, "h_schedule", minimum=3)
    if not tol > 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    if h[0] >= t_hi - t_lo:
        raise ConfigError(f"largest h ({h[0]:g}) must stay below the width of K ({t_hi - t_lo:g})")

    t_grid = sup_grid(t_lo, t_hi, points)
    residuals = {c: np.full(h.size, np.nan) for c in CONDITIONS}
    ratio = np.full(h.size, np.nan)
    reasons: Dict[str, str] = {}

    for cond in CONDITIONS + ("ratio",):
        target = ratio if cond == "ratio" else residuals[cond]
        for i, hi in enumerate(h):
            try:
                with np.errstate(all="ignore"):
                    values = _sv_residual(k, cond, t_grid, hi)
            except (KernelDomainError, KernelInvariantError) as exc:
                reasons[cond] = f"h={hi:g}: {exc}"
                logger.info("[SmoothVariation] %s condition %s failed: %s", k.name, cond, exc)
                break
            target[i] = float(np.max(values)) if np.all(np.isfinite(values)) else np.nan
            if not np.isfinite(target[i]) and cond not in reasons:
                reasons[cond] = f"h={hi:g}: non-finite residual"

    verdicts = {c: verdict(residuals[c], tol) for c in CONDITIONS}
    for c in CONDITIONS:
        if not verdicts[c] and c not in reasons:
            reasons[c] = "residuals do not settle below tol"
    return SmoothVariationReport(k.name, h, residuals, ratio, verdicts, reasons, tol)


# ---------------------------------------------------------------------------
# g_delta / f_delta
# ---------------------------------------------------------------------------


def _denominator(k: Kernel, t: float, delta: float) -> float:
    den = float(k.d_dr_lag(t + delta, delta))
    if den == 0.0 or not math.isfinite(den):
        raise KernelInvariantError(f"{k.name}: f(t+delta, t) = {den} at t={t:g}, delta={delta:g}")
    return den


def g_delta(k: Kernel, t: float, v, delta: float):
    """(f(t+delta, t-delta*v) - f(t, t-delta*v)) / f(t+delta, t)."""

    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ConfigError("g_delta is defined for v >= 0")
    num = np.asarray(k.d_dr_lag(t + delta, delta * (1.0 + v))) - np.asarray(k.d_dr_lag(t, delta * v))
    return _as_out(num / _denominator(k, t, delta))


def f_delta(k: Kernel, t: float, v, delta: float):
    """f(t+delta, t+delta-delta*v) / f(t+delta, t) for v in [0, 1]."""

    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    v = np.asarray(v, dtype=float)
    if np.any((v < 0) | (v > 1)):
        raise ConfigError("f_delta is defined for v in [0, 1]")
    den = _denominator(k, t, delta)
    out = np.empty_like(v)
    at_zero = v == 0
    if np.any(at_zero):
        limit = k.fdelta_zero_limit()
        if limit is None:
            raise KernelDomainError(f"{k.name}: f_delta at v=0 lies on the diagonal and no limit is known")
        out[at_zero] = limit
    inner = ~at_zero
    out[inner] = np.asarray(k.d_dr_lag(t + delta, delta * v[inner])) / den
    return _as_out(out)


def power_kernel_g_integral(d: float, upper: float) -> float:
    """Closed form of the integral of g_delta over [0, upper] for the power kernel."""

    return ((1.0 + upper) ** d - upper**d - 1.0) / d


def gdelta_integral(k: Kernel, t: float, delta: float, lower: float, upper: float, absolute: bool = False) -> float:
    """int_lower^upper g_delta(t, v) dv, or of |g_delta| when ``absolute``."""

    if upper <= lower:
        return 0.0

    def integrand(v):
        g = g_delta(k, t, v, delta)
        return np.abs(g) if absolute else g

    exponent = k.rho if lower == 0.0 else 1.0
    scale = 1.0 if lower == 0.0 else max(lower, 1.0)
    return graded_quad(
        integrand,
        lower,
        upper,
        exponent=exponent,
        grading_scale=scale,
        label=f"g_delta integral ({k.name})",
    ).value


@dataclass
class IntegralDiagnostics:
    kernel: str
    delta_schedule: np.ndarray
    residuals: Dict[str, np.ndarray]
    worst_t: Dict[str, np.ndarray]
    converged: Dict[str, bool]
    tol: float

    def to_frame(self) -> pd.DataFrame:
        data = {"delta": self.delta_schedule}
        for name, values in self.residuals.items():
            data[f"res_{name}"] = values
        return pd.DataFrame(data)


def gdelta_integral_diagnostics(
    k: Kernel,
    t_interval: Sequence[float],
    h0: float,
    delta_schedule: Sequence[float],
    tol: float,
    points: int = 8,
) -> IntegralDiagnostics:
    """sup over t of the four g_delta integral residuals, per delta."""

    if not 0 < h0 <= 1:
        raise ConfigError(f"h0 must lie in (0, 1], got {h0}")
    deltas = _check_schedule(delta_schedule, "delta_schedule")
    t_grid = sup_grid(float(t_interval[0]), float(t_interval[1]), points)
    inv = 1.0 / k.rho
    names = ("a", "b", "c", "d")
    residuals = {n: np.zeros(deltas.size) for n in names}
    worst = {n: np.zeros(deltas.size) for n in names}

    for i, delta in enumerate(deltas):
        V0 = h0 / delta
        for t in t_grid:
            Vt = t / delta
            try:
                values = {
                    "a": gdelta_integral(k, t, delta, V0, Vt, absolute=True),
                    "b": abs(gdelta_integral(k, t, delta, 0.0, V0, absolute=False) + inv),
                    "c": abs(gdelta_integral(k, t, delta, 0.0, Vt, absolute=False) + inv),
                    "d": abs(gdelta_integral(k, t, delta, 0.0, V0, absolute=True) - inv),
                }
            except QuadratureError as exc:
                exc.context.update(t=t, delta=delta)
                raise
            for n in names:
                if values[n] >= residuals[n][i]:
                    residuals[n][i] = values[n]
                    worst[n][i] = t

    converged = {n: non_increasing(residuals[n]) and residuals[n][-1] < tol for n in names}
    return IntegralDiagnostics(k.name, deltas, residuals, worst, converged, tol)


def fdelta_integral_diagnostics(
    k: Kernel,
    t_interval: Sequence[float],
    delta_schedule: Sequence[float],
    tol: float,
    points: int = 8,
) -> IntegralDiagnostics:
    """sup over t of |int_0^1 f_delta dv - 1/rho| and of the same with |f_delta|."""

    deltas = _check_schedule(delta_schedule, "delta_schedule")
    t_grid = sup_grid(float(t_interval[0]), float(t_interval[1]), points)
    inv = 1.0 / k.rho
    residuals = {n: np.zeros(deltas.size) for n in ("a", "b")}
    worst = {n: np.zeros(deltas.size) for n in ("a", "b")}

    for i, delta in enumerate(deltas):
        for t in t_grid:
            try:
                plain = graded_quad(
                    lambda v: f_delta(k, t, v, delta), 0.0, 1.0, exponent=k.rho, label=f"f_delta integral ({k.name})"
                ).value
                absolute = graded_quad(
                    lambda v: np.abs(f_delta(k, t, v, delta)),
                    0.0,
                    1.0,
                    exponent=k.rho,
                    label=f"|f_delta| integral ({k.name})",
                ).value
            except QuadratureError as exc:
                exc.context.update(t=t, delta=delta)
                raise
            for n, value in (("a", abs(plain - inv)), ("b", abs(absolute - inv))):
                if value >= residuals[n][i]:
                    residuals[n][i] = value
                    worst[n][i] = t

    converged = {n: non_increasing(residuals[n]) and residuals[n][-1] < tol for n in residuals}
    return IntegralDiagnostics(k.name, deltas, residuals, worst, converged, tol)


__all__ = [
    "Kernel",
    "PowerKernel",
    "PowerLogKernel",
    "CallableKernel",
    "make_power_kernel",
    "make_power_log_kernel",
    "make_fractional_kernel",
    "make_callable_kernel",
    "make_oscillating_kernel",
    "kernel_from_config",
    "check_partials",
    "PartialsReport",
    "SmoothVariationReport",
    "check_smooth_variation",
    "verdict",
    "non_increasing",
    "sup_grid",
    "g_delta",
    "f_delta",
    "power_kernel_g_integral",
    "gdelta_integral",
    "IntegralDiagnostics",
    "gdelta_integral_diagnostics",
    "fdelta_integral_diagnostics",
]
