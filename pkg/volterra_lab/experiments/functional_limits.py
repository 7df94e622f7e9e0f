from __future__ import annotations

import logging
from typing import List

import numpy as np
import pandas as pd

from ..schemas import ExperimentConfig
from ..services.volterra import fdelta_functional, gdelta_functional
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, max_or_zero, register_plugin

logger = logging.getLogger(__name__)

# probes closer than this to a jump are skipped
PROBE_CLEARANCE = 0.05
PROBE_COUNT = 9


class FunctionalLimitsPlugin(ExperimentPlugin):
    """g- and f-functionals along the delta schedule against -X(t-)/rho and X(t)/rho."""

    name = "functional-limits"
    thresholds = {"limit_residual": 5e-2}

    def probes(self, config: ExperimentConfig, jump_times: np.ndarray) -> np.ndarray:
        lo, hi = config.t_interval
        hi = min(hi, config.horizon - config.delta_schedule[0])
        candidates = np.linspace(lo, hi, PROBE_COUNT) if hi > lo else np.array([lo])
        if jump_times.size == 0:
            return candidates
        distance = np.min(np.abs(candidates[:, None] - jump_times[None, :]), axis=1)
        return candidates[distance >= PROBE_CLEARANCE]

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        x = self.driver_path(config, replica)
        probes = self.probes(config, x.jump_times)
        if probes.size == 0:
            logger.warning("[Experiment] replica %s: every probe lies within %g of a jump", replica, PROBE_CLEARANCE)

        rows = []
        worst = 0.0
        for t in probes:
            x_left = float(x.left_limit(t))
            x_now = float(x.value(t))
            scale = 1.0 + abs(x_now)
            for delta in config.delta_schedule:
                phi_g = gdelta_functional(k, x, t, delta)
                phi_f = fdelta_functional(k, x, t, delta)
                res_g = abs(phi_g + x_left / rho)
                res_f = abs(phi_f - x_now / rho)
                rows.append((t, delta, x_left, x_now, phi_g, phi_f, res_g, res_f))
            # the last rows belong to the smallest delta
            worst = max(worst, rows[-1][-2] / scale, rows[-1][-1] / scale)

        frame = pd.DataFrame(rows, columns=["probe", "delta", "x_left", "x", "phi_g", "phi_f", "res_g", "res_f"])
        return ReplicaResult(
            rho, replica, frames={"functional_limits": frame}, metrics={"limit_residual": worst, "probes": int(probes.size)}
        )

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        worst = max_or_zero(r.metrics["limit_residual"] for r in results)
        probes = sum(r.metrics["probes"] for r in results)
        return ExperimentOutcome(
            metrics={"limit_residual": worst, "probes": probes},
            checks={"limit_residual": worst <= self.thresholds["limit_residual"]},
        )


register_plugin(FunctionalLimitsPlugin())

__all__ = ["FunctionalLimitsPlugin"]
