from __future__ import annotations

import logging
from typing import Dict, List

import numpy as np

from ..schemas import ExperimentConfig
from ..services.kernels import CONDITIONS, check_partials, check_smooth_variation, non_increasing
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, register_plugin

logger = logging.getLogger(__name__)

ANALYTIC_KINDS = ("power", "power-log", "fractional")
EXACT_KINDS = ("power", "fractional")


class SmoothVariationPlugin(ExperimentPlugin):
    """Runs the smooth-variation validator and compares the verdict with the kernel's known class."""

    name = "smooth-variation"
    thresholds = {"exact_residual": 1e-12, "partials_rtol": 1e-6}
    stochastic = False

    def thresholds_for(self, config: ExperimentConfig) -> Dict[str, float]:
        return dict(self.thresholds, tol=config.tol)

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        report = check_smooth_variation(k, config.t_interval, config.h_schedule, tol=config.tol)
        worst = max(float(np.nanmax(report.condition_residuals[c])) for c in CONDITIONS)
        metrics = {
            "passed": report.passed,
            "verdict": dict(report.verdict),
            "reasons": dict(report.reasons),
            "max_residual": worst,
            "decreasing": all(non_increasing(report.condition_residuals[c]) for c in CONDITIONS),
        }
        if config.kernel.kind in ANALYTIC_KINDS:
            metrics["partials_error"] = max(check_partials(k).max_rel_error.values())
        return ReplicaResult(rho, replica, frames={"smooth_variation": report.to_frame()}, metrics=metrics)

    def expected(self, kind: str, m: dict) -> bool:
        if kind in EXACT_KINDS:
            return m["passed"] and m["max_residual"] <= self.thresholds["exact_residual"]
        if kind == "power-log":
            return m["passed"] and m["decreasing"]
        # the oscillating control must be rejected on condition (a)
        return not m["verdict"]["a"]

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        kind = config.kernel.kind
        metrics = {}
        checks = {}
        for r in results:
            tag = f"rho={r.rho:g}"
            for key, value in r.metrics.items():
                metrics[f"{key}[{tag}]"] = value
            checks[f"expected_verdict[{tag}]"] = self.expected(kind, r.metrics)
            if "partials_error" in r.metrics:
                checks[f"partials[{tag}]"] = r.metrics["partials_error"] <= self.thresholds["partials_rtol"]
        logger.info("[Experiment] smooth-variation on %s kernels: %s", kind, checks)
        return ExperimentOutcome(metrics=metrics, checks=checks)


register_plugin(SmoothVariationPlugin())

__all__ = ["SmoothVariationPlugin"]
