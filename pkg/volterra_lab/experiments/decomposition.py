from __future__ import annotations

import logging
from typing import List

import numpy as np

from ..schemas import ExperimentConfig
from ..services.drivers import make_generator
from ..services.volterra import decompose_increment, decompositions_to_frame, normalized_increment, y_value
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, max_or_zero, register_plugin

logger = logging.getLogger(__name__)

# spawn key suffix for the (t, delta) sample; the driver uses (replica,)
PAIR_STREAM = 1
CHAIN_SAMPLES = 10
DELTA_RANGE = (1e-4, 1e-1)


def _relative(gap: float, scale: float) -> float:
    return 0.0 if gap == 0.0 else gap / max(scale, np.finfo(float).tiny)


class DecompositionPlugin(ExperimentPlugin):
    """J1 + J2 against the exact Y(t + delta) - Y(t) on random (t, delta)."""

    name = "decomposition"
    thresholds = {"identity_rel": 1e-8, "normalized_chain_rel": 1e-7}

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:
        k = self.kernel(config, rho)
        x = self.driver_path(config, replica)
        rng = make_generator(config.seed, replica, PAIR_STREAM)
        n = config.sample_pairs
        lo, hi = np.log10(DELTA_RANGE[0]), np.log10(min(DELTA_RANGE[1], 0.5 * config.horizon))
        deltas = 10.0 ** rng.uniform(lo, hi, n)
        times = rng.uniform(0.0, 1.0, n) * (config.horizon - deltas)

        rows = []
        identity = np.empty(n)
        for i, (t, delta) in enumerate(zip(times, deltas)):
            dec = decompose_increment(k, x, t, delta)
            y0, y1 = y_value(k, x, np.array([t, t + delta]))
            dy = float(y1 - y0)
            identity[i] = _relative(abs(dec.total - dy), max(abs(dec.J1) + abs(dec.J2), abs(dy)))
            rows.append(dec)

        chain = []
        for t, delta in list(zip(times, deltas))[:CHAIN_SAMPLES]:
            ni = normalized_increment(k, x, t, delta)
            chain.append(_relative(ni.gap, abs(ni.phi_f) + abs(ni.phi_g)))

        frame = decompositions_to_frame(rows)
        frame["identity_rel"] = identity
        return ReplicaResult(
            rho,
            replica,
            frames={"decomposition": frame},
            metrics={"identity_rel": float(np.max(identity)), "normalized_chain_rel": max_or_zero(chain)},
        )

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        worst = {key: max_or_zero(r.metrics[key] for r in results) for key in self.thresholds}
        logger.info("[Experiment] decomposition: identity %.3g, chain %.3g", worst["identity_rel"], worst["normalized_chain_rel"])
        return ExperimentOutcome(
            metrics=dict(worst, pairs=config.sample_pairs * len(results)),
            checks={key: worst[key] <= limit for key, limit in self.thresholds.items()},
        )


register_plugin(DecompositionPlugin())

__all__ = ["DecompositionPlugin"]
