from __future__ import annotations

import logging
from typing import List

from ..schemas import ExperimentConfig
from ..services.kernels import (
    PowerKernel,
    gdelta_integral,
    gdelta_integral_diagnostics,
    non_increasing,
    power_kernel_g_integral,
)
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, register_plugin

logger = logging.getLogger(__name__)

RESIDUALS = ("a", "b", "c", "d")


class Lemma35Plugin(ExperimentPlugin):
    """Integrals of g_delta along the delta schedule; closed-form cross-check for power kernels."""

    name = "lemma35"
    thresholds = {"closed_form_gap": 2e-3}
    stochastic = False

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        diag = gdelta_integral_diagnostics(k, config.t_interval, config.h0, config.delta_schedule, config.tol)

        metrics = {f"residual_{n}": float(diag.residuals[n][-1]) for n in RESIDUALS}
        metrics.update({f"non_increasing_{n}": non_increasing(diag.residuals[n]) for n in RESIDUALS})
        if isinstance(k, PowerKernel):
            t = float(config.t_interval[0])
            gap = 0.0
            for delta in config.delta_schedule:
                upper = config.h0 / delta
                quad = gdelta_integral(k, t, delta, 0.0, upper)
                gap = max(gap, abs(quad - power_kernel_g_integral(rho, upper)))
            metrics["closed_form_gap"] = gap
        return ReplicaResult(rho, replica, frames={"gdelta_integrals": diag.to_frame()}, metrics=metrics)

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        metrics = {}
        checks = {}
        for r in results:
            tag = f"rho={r.rho:g}"
            for key, value in r.metrics.items():
                metrics[f"{key}[{tag}]"] = value
            for n in RESIDUALS:
                checks[f"non_increasing_{n}[{tag}]"] = r.metrics[f"non_increasing_{n}"]
            if "closed_form_gap" in r.metrics:
                checks[f"closed_form_gap[{tag}]"] = r.metrics["closed_form_gap"] <= self.thresholds["closed_form_gap"]
        return ExperimentOutcome(metrics=metrics, checks=checks)


register_plugin(Lemma35Plugin())

__all__ = ["Lemma35Plugin"]
