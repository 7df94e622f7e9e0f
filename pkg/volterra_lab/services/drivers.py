"""
Realised driver paths with exact cadlag queries.

A ``CadlagPath`` is a finite list of jumps plus a linear drift and an optional Brownian
part sampled on a uniform grid (linear interpolation between samples). Values are
anchored at the origin: X(0) = X(0-) = 0, so for t < 0 the jump part is
-sum of the jumps in (t, 0]. With that anchoring a two-sided Levy path assembled from
two independent one-sided processes satisfies L(t) = -L2((-t)-) for t < 0.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import settings
from ..errors import DriverError
from ..schemas import DriverSpec, fractional_violations

logger = logging.getLogger(__name__)


def make_generator(seed: int, *spawn_key: int) -> np.random.Generator:
    """Counter-based Philox stream; distinct spawn keys give independent streams."""

    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))))


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CadlagPath:
    t_begin: float
    t_end: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    drift_rate: float = 0.0
    drift_rate_neg: Optional[float] = None
    grid_step: Optional[float] = None
    diffusion_samples: Optional[np.ndarray] = None
    label: str = "path"
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    _anchor: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = _readonly(self.jump_times)
        sizes = _readonly(self.jump_sizes)
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", sizes)
        if not self.t_end > self.t_begin:
            raise DriverError(f"horizon [{self.t_begin}, {self.t_end}] has nonpositive length")
        if times.shape != sizes.shape or times.ndim != 1:
            raise DriverError("jump_times and jump_sizes must be 1-d arrays of equal length")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise DriverError("jump_times must be strictly increasing")
            if times[0] <= self.t_begin or times[-1] > self.t_end:
                raise DriverError(f"jump times must lie in ({self.t_begin}, {self.t_end}]")
            if np.any(times == 0.0):
                raise DriverError("a jump at t=0 breaks the convention X(0-) = X(0) = 0")
        if not self.t_begin <= 0.0 <= self.t_end:
            raise DriverError("the horizon must contain the origin")
        if self.diffusion_samples is not None:
            if self.grid_step is None or not self.grid_step > 0:
                raise DriverError("diffusion samples need a positive grid_step")
            samples = _readonly(self.diffusion_samples)
            needed = int(math.ceil((self.t_end - self.t_begin) / self.grid_step - 1e-9)) + 1
            if samples.size < needed:
                raise DriverError(f"diffusion grid has {samples.size} samples, horizon needs {needed}")
            object.__setattr__(self, "diffusion_samples", samples)

        cum = np.concatenate(([0.0], np.cumsum(sizes)))
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)
        n0 = int(np.searchsorted(times, 0.0, side="right"))
        object.__setattr__(self, "_anchor", float(cum[n0]))

    # -- basic properties ---------------------------------------------------------

    @property
    def horizon(self) -> Tuple[float, float]:
        return (self.t_begin, self.t_end)

    @property
    def has_diffusion(self) -> bool:
        return self.diffusion_samples is not None

    @property
    def is_pure_jump(self) -> bool:
        neg = self.drift_rate if self.drift_rate_neg is None else self.drift_rate_neg
        return self.drift_rate == 0.0 and neg == 0.0 and not self.has_diffusion

    @property
    def diffusion_grid(self) -> Optional[np.ndarray]:
        if self.diffusion_samples is None:
            return None
        return self.t_begin + self.grid_step * np.arange(self.diffusion_samples.size)

    def _check(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any((t < self.t_begin) | (t > self.t_end)) or np.any(np.isnan(t)):
            raise DriverError(f"query outside the horizon [{self.t_begin}, {self.t_end}]")
        return t

    # -- components -----------------------------------------------------------------

    def _jump_sum(self, t: np.ndarray, side: str) -> np.ndarray:
        idx = np.searchsorted(self.jump_times, t, side=side)
        return self._cum[idx] - self._anchor

    def continuous_part(self, t) -> np.ndarray:
        """Drift plus Brownian part (continuous in t)."""

        t = np.asarray(t, dtype=float)
        neg = self.drift_rate if self.drift_rate_neg is None else self.drift_rate_neg
        out = np.where(t >= 0, self.drift_rate * t, neg * t)
        if self.diffusion_samples is not None:
            out = out + np.interp(t, self.diffusion_grid, self.diffusion_samples)
        return out

    def value(self, t):
        """X(t)."""

        t = self._check(t)
        out = self._jump_sum(t, "right") + self.continuous_part(t)
        return float(out) if out.ndim == 0 else out

    __call__ = value

    def left_limit(self, t):
        """X(t-)."""

        t = self._check(t)
        out = self._jump_sum(t, "left") + self.continuous_part(t)
        return float(out) if out.ndim == 0 else out

    def jump(self, t):
        """Delta_X(t) = X(t) - X(t-), read off the jump list."""

        t = self._check(t)
        lo = np.searchsorted(self.jump_times, t, side="left")
        hi = np.searchsorted(self.jump_times, t, side="right")
        padded = np.concatenate((self.jump_sizes, [0.0]))
        out = np.where(hi > lo, padded[lo], 0.0)
        return float(out) if out.ndim == 0 else out

    def jump_times_in(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Jumps with a < tau <= b."""

        lo = np.searchsorted(self.jump_times, a, side="right")
        hi = np.searchsorted(self.jump_times, b, side="right")
        return self.jump_times[lo:hi], self.jump_sizes[lo:hi]

    def continuous_knots(self, a: float, b: float) -> np.ndarray:
        """a, b and the diffusion grid points strictly between them."""

        if self.diffusion_samples is None:
            return np.array([a, b], dtype=float)
        grid = self.diffusion_grid
        inner = grid[(grid > a) & (grid < b)]
        return np.concatenate(([a], inner, [b]))

    # -- norms ----------------------------------------------------------------------

    def sup_norm(self, interval: Optional[Sequence[float]] = None) -> float:
        """max |X| over the interval, exact for piecewise-linear paths."""

        a, b = (self.t_begin, self.t_end) if interval is None else (float(interval[0]), float(interval[1]))
        times, _ = self.jump_times_in(a, b)
        if a in self.jump_times:
            times = np.concatenate(([a], times))
        candidates = [np.array([a, b]), times]
        if self.diffusion_samples is not None:
            grid = self.diffusion_grid
            candidates.append(grid[(grid >= a) & (grid <= b)])
        if a < 0 < b:
            candidates.append(np.array([0.0]))
        pts = np.concatenate(candidates)
        values = np.abs(np.asarray(self.value(pts)))
        if times.size:
            values = np.concatenate((values, np.abs(np.asarray(self.left_limit(times)))))
        return float(np.max(values))

    def sup_jump(self, interval: Optional[Sequence[float]] = None) -> float:
        return sup_jump(self, interval)

    # -- transforms / serialisation ---------------------------------------------------

    def scaled(self, factor: float) -> "CadlagPath":
        """The path factor * X."""

        neg = None if self.drift_rate_neg is None else self.drift_rate_neg * factor
        diffusion = None if self.diffusion_samples is None else self.diffusion_samples * factor
        return CadlagPath(
            self.t_begin,
            self.t_end,
            self.jump_times,
            self.jump_sizes * factor,
            self.drift_rate * factor,
            neg,
            self.grid_step,
            diffusion,
            label=f"{self.label}*{factor:g}",
        )

    def to_record(self) -> dict:
        return {
            "label": self.label,
            "t_begin": self.t_begin,
            "t_end": self.t_end,
            "jump_times": self.jump_times.tolist(),
            "jump_sizes": self.jump_sizes.tolist(),
            "drift_rate": self.drift_rate,
            "drift_rate_neg": self.drift_rate_neg,
            "grid_step": self.grid_step,
            "diffusion_samples": None if self.diffusion_samples is None else self.diffusion_samples.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)

    @classmethod
    def from_record(cls, record: dict) -> "CadlagPath":
        return cls(
            t_begin=record["t_begin"],
            t_end=record["t_end"],
            jump_times=record["jump_times"],
            jump_sizes=record["jump_sizes"],
            drift_rate=record.get("drift_rate", 0.0),
            drift_rate_neg=record.get("drift_rate_neg"),
            grid_step=record.get("grid_step"),
            diffusion_samples=record.get("diffusion_samples"),
            label=record.get("label", "path"),
        )

    def to_frame(self) -> pd.DataFrame:
        """Rows (kind, time, value): one per jump, one per diffusion sample, drift rates."""

        frames = [
            pd.DataFrame({"kind": "jump", "time": self.jump_times, "value": self.jump_sizes}),
            pd.DataFrame({"kind": ["drift"], "time": [np.nan], "value": [self.drift_rate]}),
        ]
        if self.drift_rate_neg is not None:
            frames.append(pd.DataFrame({"kind": ["drift_neg"], "time": [np.nan], "value": [self.drift_rate_neg]}))
        if self.diffusion_samples is not None:
            frames.append(pd.DataFrame({"kind": "diffusion", "time": self.diffusion_grid, "value": self.diffusion_samples}))
        return pd.concat(frames, ignore_index=True)


def sup_jump(path: CadlagPath, interval: Optional[Sequence[float]] = None) -> float:
    """max |Delta_X| over jump times in the closed interval; 0 when there are none."""

    a, b = path.horizon if interval is None else (float(interval[0]), float(interval[1]))
    mask = (path.jump_times >= a) & (path.jump_times <= b)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(path.jump_sizes[mask])))


def simulate(
    spec: DriverSpec,
    horizon: Sequence[float],
    stream: int = 0,
    *,
    spawn_key: Optional[Tuple[int, ...]] = None,
    grid_step: Optional[float] = None,
) -> CadlagPath:
    """Realise X on the horizon: Poisson jump times, i.i.d. sizes, drift, Brownian part."""

    t_begin, t_end = float(horizon[0]), float(horizon[1])
    length = t_end - t_begin
    if not length > 0:
        raise DriverError(f"horizon [{t_begin}, {t_end}] has nonpositive length")
    if spec.jump_intensity < 0:
        raise DriverError(f"jump intensity must be nonnegative, got {spec.jump_intensity}")
    if not t_begin <= 0.0 <= t_end:
        raise DriverError("the horizon must contain the origin")

    rng = make_generator(spec.seed, *(spawn_key if spawn_key is not None else (stream,)))

    if spec.kind == "deterministic-jumps":
        times = np.asarray(spec.jump_times, dtype=float)
        sizes = np.asarray(spec.jump_sizes, dtype=float)
        keep = (times > t_begin) & (times <= t_end)
        times, sizes = times[keep], sizes[keep]
    else:
        count = int(rng.poisson(spec.jump_intensity * length))
        times = np.sort(rng.uniform(t_begin, t_end, count))
        sizes = spec.jump_law.sample(rng, count)
        keep = (times > t_begin) & (times != 0.0)
        times, sizes = times[keep], sizes[keep]

    step = None
    samples = None
    if spec.diffusion_vol > 0:
        step = settings.DIFFUSION_GRID_STEP if grid_step is None else grid_step
        n_steps = int(math.ceil(length / step - 1e-9))
        grid = t_begin + step * np.arange(n_steps + 1)
        increments = rng.normal(0.0, spec.diffusion_vol * math.sqrt(step), n_steps)
        samples = np.concatenate(([0.0], np.cumsum(increments)))
        samples -= np.interp(0.0, grid, samples)

    path = CadlagPath(
        t_begin,
        t_end,
        times,
        sizes,
        drift_rate=spec.drift_rate,
        grid_step=step,
        diffusion_samples=samples,
        label=f"{spec.kind}(seed={spec.seed}, key={spawn_key if spawn_key is not None else (stream,)})",
    )
    logger.debug("[Drivers] simulated %s with %s jumps", path.label, times.size)
    return path


def make_two_sided(
    spec_pos: DriverSpec,
    spec_neg: DriverSpec,
    T_neg: float,
    T_pos: float,
    *,
    fractional: bool = True,
    stream: int = 0,
) -> CadlagPath:
    """Two-sided path on [-T_neg, T_pos] from independent one-sided branches.

    ``spec_neg`` describes L2 in its own clock u = -t > 0: a jump of L2 at u becomes a
    jump of the same size of L at -u.
    """

    if not (T_neg > 0 and T_pos > 0):
        raise DriverError(f"T_neg and T_pos must be positive, got {T_neg}, {T_pos}")
    if fractional:
        problems = fractional_violations(spec_pos) + fractional_violations(spec_neg)
        if problems:
            raise DriverError(
                "fractional Levy moment conditions (E[L(1)]=0, E[L(1)^2]<inf, no Brownian component): "
                + "; ".join(problems)
            )
    if spec_pos.diffusion_vol > 0 or spec_neg.diffusion_vol > 0:
        raise DriverError("two-sided paths are pure-jump plus drift; diffusion_vol must be 0")

    pos = simulate(spec_pos, (0.0, T_pos), spawn_key=(stream, 0))
    neg = simulate(spec_neg, (0.0, T_neg), spawn_key=(stream, 1))

    keep = neg.jump_times < T_neg
    neg_times = -neg.jump_times[keep][::-1]
    neg_sizes = neg.jump_sizes[keep][::-1]

    return CadlagPath(
        -float(T_neg),
        float(T_pos),
        np.concatenate((neg_times, pos.jump_times)),
        np.concatenate((neg_sizes, pos.jump_sizes)),
        drift_rate=spec_pos.drift_rate,
        drift_rate_neg=spec_neg.drift_rate,
        label=f"two-sided(seed={spec_pos.seed}/{spec_neg.seed}, stream={stream})",
    )


@dataclass(frozen=True)
class LevyMoments:
    mean: float
    second_moment: float

    @property
    def scale(self) -> float:
        """sqrt(E[L(1)^2])."""

        return math.sqrt(self.second_moment)


def levy_moments(spec: DriverSpec) -> LevyMoments:
    """E[L(1)] and E[L(1)^2] of a random driver."""

    if spec.kind == "deterministic-jumps":
        raise DriverError("moments are defined for random drivers only")
    lam = spec.jump_intensity
    mean = spec.drift_rate + lam * spec.jump_law.mean
    variance = lam * spec.jump_law.second_moment + spec.diffusion_vol**2
    return LevyMoments(mean=mean, second_moment=variance + mean**2)


__all__ = [
    "CadlagPath",
    "LevyMoments",
    "levy_moments",
    "make_generator",
    "make_two_sided",
    "simulate",
    "sup_jump",
]
