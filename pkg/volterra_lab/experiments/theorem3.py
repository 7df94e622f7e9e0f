from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import List

import numpy as np

from ..schemas import ExperimentConfig
from ..services.drivers import LevyMoments, levy_moments
from ..services.fraclevy import default_truncation, eval_fraclevy, levy_two_sided, m1_values
from ..services.kernels import make_fractional_kernel
from ..services.regdiag import holder_exponent, uniform_modulus_scan
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, max_or_zero, register_plugin

logger = logging.getLogger(__name__)

CALIBRATION_EXPONENT = 0.4


@lru_cache(maxsize=16)
def _truncation(stats: LevyMoments, d: float, horizon: float) -> float:
    return default_truncation(stats, d, horizon, horizon)


class Theorem3Plugin(ExperimentPlugin):
    """Hoelder slope of fractional Levy paths, plus the uniform-modulus limit of M1."""

    name = "theorem3"
    thresholds = {
        "slope_abs": 0.05,
        "r2_min": 0.98,
        "calibration_abs": 0.02,
        "mean_se_multiple": 4.0,
        "m1_modulus_rel": 0.10,
    }

    def grid(self, config: ExperimentConfig) -> np.ndarray:
        return np.linspace(0.0, config.horizon, config.grid_n + 1)

    def run_replica(self, config: ExperimentConfig, d: float, replica: int) -> ReplicaResult:
        spec = config.driver_for_run()
        stats = levy_moments(spec)
        T = config.truncation_T or _truncation(stats, d, config.horizon)
        l = levy_two_sided(spec, T_neg=T, T_pos=config.horizon, stream=replica)
        grid = self.grid(config)
        path = eval_fraclevy(l, d, grid, T, stats=stats)
        fit = holder_exponent(path.values, config.dyadic_levels, min_level=config.min_level, dt=grid[1] - grid[0])

        kernel = make_fractional_kernel(d)
        scan = uniform_modulus_scan(
            kernel,
            l,
            lambda t: m1_values(l, d, t),
            config.h_schedule,
            config.pair_budget,
            interval=(0.0, min(1.0, config.horizon)),
            seed=config.seed,
        )

        frames = {"holder": fit.to_frame(), "m1_uniform": scan.to_frame()}
        if replica == 0:
            frames["fraclevy_path"] = path.to_frame()
        return ReplicaResult(
            d,
            replica,
            frames=frames,
            metrics={
                "slope": fit.slope,
                "r2": fit.r2,
                "m_end": float(path.values[-1]),
                "m1_modulus_rel": float(scan.relative_gap()[-1]),
                "truncation_T": T,
                "truncation_bound": path.truncation_bound,
            },
        )

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        grid = self.grid(config)
        calibration = holder_exponent(
            grid**CALIBRATION_EXPONENT, config.dyadic_levels, min_level=config.min_level, dt=grid[1] - grid[0]
        )
        metrics = {"calibration_slope": calibration.slope}
        checks = {
            "calibration": calibration.slope is not None
            and abs(calibration.slope - CALIBRATION_EXPONENT) <= self.thresholds["calibration_abs"]
        }

        for d in sorted({r.rho for r in results}):
            group = [r for r in results if r.rho == d]
            slopes = [r.metrics["slope"] for r in group]
            tag = f"d={d:g}"
            if any(s is None for s in slopes):
                metrics[f"median_slope[{tag}]"] = None
                checks[f"slope[{tag}]"] = False
                continue
            median_slope = float(np.median(slopes))
            median_r2 = float(np.median([r.metrics["r2"] for r in group]))
            metrics[f"median_slope[{tag}]"] = median_slope
            metrics[f"median_r2[{tag}]"] = median_r2
            metrics[f"min_r2[{tag}]"] = float(min(r.metrics["r2"] for r in group))
            metrics[f"m1_modulus_rel[{tag}]"] = max_or_zero(r.metrics["m1_modulus_rel"] for r in group)
            metrics[f"truncation_T[{tag}]"] = group[0].metrics["truncation_T"]
            metrics[f"truncation_bound[{tag}]"] = group[0].metrics["truncation_bound"]
            checks[f"slope[{tag}]"] = abs(median_slope - d) <= self.thresholds["slope_abs"]
            checks[f"r2[{tag}]"] = median_r2 >= self.thresholds["r2_min"]
            checks[f"m1_modulus[{tag}]"] = metrics[f"m1_modulus_rel[{tag}]"] <= self.thresholds["m1_modulus_rel"]

            ends = np.array([r.metrics["m_end"] for r in group])
            metrics[f"mean_m_end[{tag}]"] = float(ends.mean())
            if ends.size >= 2:
                se = float(ends.std(ddof=1)) / math.sqrt(ends.size)
                metrics[f"se_m_end[{tag}]"] = se
                checks[f"mean_m_end[{tag}]"] = abs(ends.mean()) <= self.thresholds["mean_se_multiple"] * se

        logger.info("[Experiment] theorem3: %s", ", ".join(f"{k}={v}" for k, v in metrics.items() if "slope" in k))
        return ExperimentOutcome(metrics=metrics, checks=checks)


register_plugin(Theorem3Plugin())

__all__ = ["Theorem3Plugin"]
