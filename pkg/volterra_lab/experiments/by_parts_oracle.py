from __future__ import annotations

import logging
from typing import Dict, List

import numpy as np
import pandas as pd

from ..schemas import ExperimentConfig
from ..services.volterra import evaluate_path
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, max_or_zero, register_plugin

logger = logging.getLogger(__name__)

PURE_JUMP_KINDS = ("compound-poisson", "deterministic-jumps")


class ByPartsOraclePlugin(ExperimentPlugin):
    """Direct jump sum against integration by parts on the same path and grid."""

    name = "by-parts-oracle"
    thresholds = {"max_scaled_discrepancy": 1e-12}
    # drift and diffusion parts go through quadrature on both sides
    mixed_thresholds = {"max_scaled_discrepancy": 1e-8}

    def thresholds_for(self, config: ExperimentConfig) -> Dict[str, float]:
        if config.driver.kind in PURE_JUMP_KINDS:
            return dict(self.thresholds)
        return dict(self.mixed_thresholds)

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        x = self.driver_path(config, replica)
        grid = np.linspace(0.0, config.horizon, config.grid_n)

        direct = evaluate_path(k, x, grid, "direct")
        by_parts = evaluate_path(k, x, grid, "by-parts")
        scaled = np.abs(direct.values - by_parts.values) / (1.0 + np.abs(direct.values))

        frame = pd.DataFrame(
            {"t": grid, "direct": direct.values, "by_parts": by_parts.values, "scaled_discrepancy": scaled}
        )
        return ReplicaResult(
            rho,
            replica,
            frames={"oracle": frame},
            metrics={"max_scaled_discrepancy": float(np.max(scaled)), "jumps": int(x.jump_times.size)},
        )

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        limit = self.thresholds_for(config)["max_scaled_discrepancy"]
        worst = max_or_zero(r.metrics["max_scaled_discrepancy"] for r in results)
        logger.info("[Experiment] by-parts oracle: worst scaled discrepancy %.3g over %s paths", worst, len(results))
        return ExperimentOutcome(
            metrics={"max_scaled_discrepancy": worst, "paths": len(results)},
            checks={"oracle_agreement": worst <= limit},
        )


register_plugin(ByPartsOraclePlugin())

__all__ = ["ByPartsOraclePlugin"]
