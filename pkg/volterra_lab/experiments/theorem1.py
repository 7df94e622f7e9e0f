from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np

from ..schemas import ExperimentConfig
from ..services.drivers import CadlagPath
from ..services.regdiag import PointwiseScan, pointwise_ratio_scan
from ..services.volterra import VolterraEvaluator
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, max_or_zero, register_plugin

logger = logging.getLogger(__name__)


def probe_times(x: CadlagPath, end: float) -> np.ndarray:
    """Every jump in (0, end] plus the midpoints between consecutive jumps."""

    taus = x.jump_times[(x.jump_times > 0.0) & (x.jump_times <= end)]
    knots = np.concatenate(([0.0], taus, [end]))
    mids = 0.5 * (knots[:-1] + knots[1:])
    mids = mids[mids > 0.0]
    return np.unique(np.concatenate((taus, mids)))


def first_jump_identity(x: CadlagPath, scan: PointwiseScan) -> Optional[float]:
    """Worst |ratio - jump| / |jump| at the first jump, over h below the gap to the next jump."""

    if not x.is_pure_jump:
        return None
    at_jump = np.flatnonzero(scan.at_jump)
    if at_jump.size == 0:
        return None
    i = int(at_jump[0])
    tau = scan.probes[i]
    later = x.jump_times[x.jump_times > tau]
    gap = later[0] - tau if later.size else np.inf
    usable = scan.h_schedule < gap
    if not np.any(usable):
        return None
    truth = scan.truth[i]
    return float(np.max(np.abs(scan.ratios[i, usable] - truth)) / abs(truth))


class Theorem1Plugin(ExperimentPlugin):
    """Pointwise ratio (M(s+h) - M(s)) / F(s+h, s) against the driver jump at s."""

    name = "theorem1"
    thresholds = {"jump_rel": 0.05, "off_jump_scaled": 0.05, "single_jump_identity": 1e-12}

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        x = self.driver_path(config, replica)
        end = config.horizon - config.h_schedule[0]
        probes = probe_times(x, end)
        scan = pointwise_ratio_scan(k, x, VolterraEvaluator(k, x, "direct"), probes, config.h_schedule)

        jumps = scan.at_jump
        jump_rel = scan.errors()[jumps] / np.abs(scan.truth[jumps])
        off_jump = np.abs(scan.extrapolated[~jumps]) / (1.0 + scan.sup_norm)
        identity = first_jump_identity(x, scan)

        return ReplicaResult(
            rho,
            replica,
            frames={"pointwise": scan.to_frame(), "pointwise_limits": scan.limits_frame()},
            metrics={
                "jump_rel": max_or_zero(jump_rel),
                "off_jump_scaled": max_or_zero(off_jump),
                "single_jump_identity": identity,
                "jump_probes": int(np.count_nonzero(jumps)),
            },
        )

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        metrics = {
            "jump_rel": max_or_zero(r.metrics["jump_rel"] for r in results),
            "off_jump_scaled": max_or_zero(r.metrics["off_jump_scaled"] for r in results),
            "jump_probes": sum(r.metrics["jump_probes"] for r in results),
        }
        identities = [r.metrics["single_jump_identity"] for r in results if r.metrics["single_jump_identity"] is not None]
        metrics["single_jump_identity"] = max_or_zero(identities) if identities else None

        checks = {
            "jump_rel": metrics["jump_rel"] <= self.thresholds["jump_rel"],
            "off_jump_scaled": metrics["off_jump_scaled"] <= self.thresholds["off_jump_scaled"],
        }
        if identities:
            checks["single_jump_identity"] = metrics["single_jump_identity"] <= self.thresholds["single_jump_identity"]
        logger.info("[Experiment] theorem1: jump %.3g, off-jump %.3g", metrics["jump_rel"], metrics["off_jump_scaled"])
        return ExperimentOutcome(metrics=metrics, checks=checks)


register_plugin(Theorem1Plugin())

__all__ = ["Theorem1Plugin", "first_jump_identity", "probe_times"]
