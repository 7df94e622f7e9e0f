from __future__ import annotations

from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import settings


# ---------- Jump laws ----------


class NormalJumps(BaseModel):
    law: Literal["normal"] = "normal"
    mu: float = 0.0
    sigma: float = Field(1.0, ge=0)

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def second_moment(self) -> float:
        return self.mu**2 + self.sigma**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mu, self.sigma, size)


class UniformJumps(BaseModel):
    law: Literal["uniform"] = "uniform"
    a: float = -1.0
    b: float = 1.0

    @model_validator(mode="after")
    def _ordered(self):
        if not self.a < self.b:
            raise ValueError(f"uniform jump law needs a < b (got a={self.a}, b={self.b})")
        return self

    @property
    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def second_moment(self) -> float:
        return (self.a**2 + self.a * self.b + self.b**2) / 3.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.a, self.b, size)


class TwoPointJumps(BaseModel):
    law: Literal["two-point"] = "two-point"
    p: float = Field(0.5, ge=0, le=1)
    x1: float = 1.0
    x2: float = -1.0

    @property
    def mean(self) -> float:
        return self.p * self.x1 + (1 - self.p) * self.x2

    @property
    def second_moment(self) -> float:
        return self.p * self.x1**2 + (1 - self.p) * self.x2**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.where(rng.random(size) < self.p, self.x1, self.x2)


JumpLaw = Annotated[Union[NormalJumps, UniformJumps, TwoPointJumps], Field(discriminator="law")]


# ---------- Drivers ----------

DriverKind = Literal["compound-poisson", "cp-with-drift", "cp-with-diffusion", "deterministic-jumps"]


class DriverSpec(BaseModel):
    kind: DriverKind = "compound-poisson"
    jump_intensity: float = Field(0.0, ge=0)
    jump_law: JumpLaw = Field(default_factory=NormalJumps)
    drift_rate: float = 0.0
    diffusion_vol: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)

    # deterministic-jumps only
    jump_times: List[float] = Field(default_factory=list)
    jump_sizes: List[float] = Field(default_factory=list)

    # set when the driver feeds a fractional Levy process
    fractional: bool = False

    @model_validator(mode="after")
    def _consistent(self):
        if self.kind == "deterministic-jumps":
            if len(self.jump_times) != len(self.jump_sizes):
                raise ValueError("jump_times and jump_sizes must have the same length")
            times = np.asarray(self.jump_times, dtype=float)
            if times.size and np.any(np.diff(times) <= 0):
                raise ValueError("jump_times must be strictly increasing")
            if np.any(times == 0):
                raise ValueError("a jump at t=0 breaks the convention X(0-) = X(0) = 0")
        elif self.jump_times or self.jump_sizes:
            raise ValueError(f"jump_times/jump_sizes are only used by kind='deterministic-jumps', not {self.kind!r}")

        if self.kind == "compound-poisson" and self.drift_rate != 0:
            raise ValueError("kind='compound-poisson' has no drift; use kind='cp-with-drift'")
        if self.kind != "cp-with-diffusion" and self.diffusion_vol != 0:
            raise ValueError("diffusion_vol is only used by kind='cp-with-diffusion'")

        if self.fractional:
            problems = fractional_violations(self)
            if problems:
                raise ValueError("; ".join(problems))
        return self


def fractional_violations(spec: DriverSpec) -> List[str]:
    """Reasons a driver cannot feed a fractional Levy process (empty when it can)."""

    problems: List[str] = []
    if spec.diffusion_vol != 0:
        problems.append(
            "fractional Levy drivers must be without a Brownian component (diffusion_vol must be 0)"
        )
    if spec.drift_rate != 0:
        problems.append("fractional Levy drivers need E[L(1)] = 0, so drift_rate must be 0")
    if spec.kind != "deterministic-jumps" and spec.jump_intensity > 0 and abs(spec.jump_law.mean) > 1e-12:
        problems.append(
            f"fractional Levy drivers need E[L(1)] = 0, but the jump law has mean {spec.jump_law.mean:g}"
        )
    return problems


# ---------- Kernels ----------


class KernelConfig(BaseModel):
    kind: Literal["power", "power-log", "fractional", "oscillating"] = "power"
    rho: float = 0.5
    eta: float = 0.0

    @field_validator("rho")
    @classmethod
    def _rho_range(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"rho must lie in the open interval (0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def _fractional_range(self):
        if self.kind == "fractional" and not self.rho < 0.5:
            raise ValueError(f"fractional kernels need d = rho in (0, 0.5), got {self.rho}")
        return self


# ---------- Experiments ----------

ExperimentName = Literal[
    "smooth-variation",
    "by-parts-oracle",
    "decomposition",
    "functional-limits",
    "theorem1",
    "theorem2",
    "theorem3",
    "lemma35",
    "lemma36",
    "tail-bound",
]

FRACTIONAL_EXPERIMENTS = {"theorem3", "tail-bound"}


def _default_driver() -> DriverSpec:
    return DriverSpec(kind="compound-poisson", jump_intensity=5.0)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentName
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    # each rho listed here reruns the experiment with kernel.rho replaced
    rho_sweep: List[float] = Field(default_factory=list)
    driver: DriverSpec = Field(default_factory=_default_driver)

    horizon: float = Field(1.0, gt=0)
    grid_n: int = Field(50, ge=2)
    h_schedule: List[float] = Field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5])
    delta_schedule: List[float] = Field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5])
    replicas: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    out_dir: str = settings.OUT_DIR

    # diagnostics
    t_interval: Tuple[float, float] = (0.2, 0.8)
    h0: float = Field(0.5, gt=0, le=1)
    tol: float = Field(0.1, gt=0)
    pair_budget: int = Field(1000, ge=1000)
    sample_pairs: int = Field(100, ge=1)
    dyadic_levels: int = Field(6, ge=5)
    min_level: int = Field(2, ge=0)

    # fractional Levy
    truncation_T: Optional[float] = Field(None, gt=0)
    tail_cut: float = Field(-10.0, le=0)
    tail_span: float = Field(200.0, gt=0)

    @field_validator("h_schedule", "delta_schedule")
    @classmethod
    def _decreasing(cls, value: List[float], info) -> List[float]:
        if not value:
            raise ValueError(f"{info.field_name} must not be empty")
        if any(v <= 0 for v in value):
            raise ValueError(f"{info.field_name} values must be positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError(f"{info.field_name} must be strictly decreasing")
        return value

    @field_validator("rho_sweep")
    @classmethod
    def _sweep_range(cls, value: List[float]) -> List[float]:
        for rho in value:
            if not 0.0 < rho < 1.0:
                raise ValueError(f"rho must lie in the open interval (0, 1), got {rho}")
        return value

    @field_validator("t_interval")
    @classmethod
    def _interval(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not 0 <= value[0] <= value[1]:
            raise ValueError(f"t_interval must satisfy 0 <= lo <= hi, got {value}")
        return value

    @model_validator(mode="after")
    def _experiment_requirements(self):
        if self.experiment in FRACTIONAL_EXPERIMENTS:
            problems = fractional_violations(self.driver)
            if problems:
                raise ValueError(
                    "fractional Levy moment conditions (E[L(1)]=0, E[L(1)^2]<inf, no Brownian component): "
                    + "; ".join(problems)
                )
            for d in self.rho_values():
                if not d < 0.5:
                    raise ValueError(f"fractional experiments need d = rho in (0, 0.5), got {d}")
        if self.kernel.kind == "fractional":
            for d in self.rho_sweep:
                if not d < 0.5:
                    raise ValueError(f"rho_sweep: fractional kernels need d = rho in (0, 0.5), got {d}")
        if self.experiment == "theorem3":
            need = 2 ** (self.min_level + self.dyadic_levels - 1)
            if self.grid_n < need:
                raise ValueError(f"grid_n={self.grid_n} is too coarse for {self.dyadic_levels} dyadic levels; need >= {need}")
        if self.kernel.kind == "power-log" and self.horizon >= 1.0:
            raise ValueError("power-log kernels are positive only for t - r < 1; use horizon < 1")
        return self

    def rho_values(self) -> List[float]:
        return list(self.rho_sweep) or [self.kernel.rho]

    def kernel_for(self, rho: float) -> KernelConfig:
        return self.kernel.model_copy(update={"rho": rho})

    def driver_for_run(self) -> DriverSpec:
        """Driver spec with the experiment seed as master seed."""

        return self.driver.model_copy(update={"seed": self.seed})
