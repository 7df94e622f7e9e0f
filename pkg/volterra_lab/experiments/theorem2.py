from __future__ import annotations

import logging
from typing import List

from ..schemas import ExperimentConfig
from ..services.regdiag import uniform_modulus_scan
from ..services.volterra import VolterraEvaluator
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, max_or_zero, register_plugin

logger = logging.getLogger(__name__)


class Theorem2Plugin(ExperimentPlugin):
    """sup over |t - s| <= h of |M(t) - M(s)| / F(t, s) against the largest jump on [0, 1]."""

    name = "theorem2"
    thresholds = {"uniform_rel": 0.10}

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        x = self.driver_path(config, replica)
        interval = (0.0, min(1.0, config.horizon))
        scan = uniform_modulus_scan(
            k,
            x,
            VolterraEvaluator(k, x, "direct"),
            config.h_schedule,
            config.pair_budget,
            interval=interval,
            seed=config.seed,
        )
        return ReplicaResult(
            rho,
            replica,
            frames={"uniform": scan.to_frame()},
            metrics={"uniform_rel": float(scan.relative_gap()[-1]), "sup_jump": scan.sup_jump},
        )

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        worst = max_or_zero(r.metrics["uniform_rel"] for r in results)
        logger.info("[Experiment] theorem2: worst relative gap %.3g at h=%g", worst, config.h_schedule[-1])
        return ExperimentOutcome(
            metrics={"uniform_rel": worst, "h_min": config.h_schedule[-1], "paths": len(results)},
            checks={"uniform_rel": worst <= self.thresholds["uniform_rel"]},
        )


register_plugin(Theorem2Plugin())

__all__ = ["Theorem2Plugin"]
