from __future__ import annotations

import logging
from typing import List

from ..schemas import ExperimentConfig
from ..services.kernels import PowerKernel, fdelta_integral_diagnostics, non_increasing
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, register_plugin

logger = logging.getLogger(__name__)


class Lemma36Plugin(ExperimentPlugin):
    """int_0^1 f_delta dv against 1/rho along the delta schedule."""

    name = "lemma36"
    thresholds = {"power_residual": 1e-9}
    stochastic = False

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        diag = fdelta_integral_diagnostics(k, config.t_interval, config.delta_schedule, config.tol)
        metrics = {
            "residual_a": float(diag.residuals["a"][-1]),
            "residual_b": float(diag.residuals["b"][-1]),
            "max_residual": float(max(diag.residuals["a"].max(), diag.residuals["b"].max())),
            "non_increasing": non_increasing(diag.residuals["a"]) and non_increasing(diag.residuals["b"]),
            "power": isinstance(k, PowerKernel),
        }
        return ReplicaResult(rho, replica, frames={"fdelta_integrals": diag.to_frame()}, metrics=metrics)

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        metrics = {}
        checks = {}
        for r in results:
            tag = f"rho={r.rho:g}"
            for key in ("residual_a", "residual_b", "max_residual"):
                metrics[f"{key}[{tag}]"] = r.metrics[key]
            if r.metrics["power"]:
                # the closed form is exact at every delta
                checks[f"power_residual[{tag}]"] = r.metrics["max_residual"] <= self.thresholds["power_residual"]
            else:
                checks[f"non_increasing[{tag}]"] = r.metrics["non_increasing"]
        return ExperimentOutcome(metrics=metrics, checks=checks)


register_plugin(Lemma36Plugin())

__all__ = ["Lemma36Plugin"]
