from __future__ import annotations

import logging
from typing import List

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import ConfigError
from ..schemas import ExperimentConfig
from ..services.drivers import levy_moments
from ..services.fraclevy import default_truncation, levy_two_sided, tail_increment, truncation_tail_bound
from . import ExperimentOutcome, ExperimentPlugin, ReplicaResult, register_plugin

logger = logging.getLogger(__name__)

FAR_T, NEAR_T = 100.0, 10.0


class TailBoundPlugin(ExperimentPlugin):
    """Realised increments of the far tail of the moving-average integral, and the tail bound."""

    name = "tail-bound"
    thresholds = {"slope_minus_d": 0.0, "linearity": 1e-12}

    def run_replica(self, config: ExperimentConfig, d: float, replica: int) -> ReplicaResult:
        if not config.tail_cut > -config.tail_span:
            raise ConfigError(f"tail_cut {config.tail_cut} must lie inside the realised span -{config.tail_span}")
        spec = config.driver_for_run()
        l = levy_two_sided(spec, T_neg=config.tail_span, T_pos=config.horizon, stream=replica)
        t = float(config.t_interval[0])
        deltas = np.asarray(config.delta_schedule, dtype=float)
        increments = tail_increment(l, d, t, config.tail_cut, deltas)

        magnitude = np.abs(increments)
        if np.all(magnitude > 0) and deltas.size >= 2:
            slope = float(stats.linregress(np.log(deltas), np.log(magnitude)).slope)
        else:
            slope = None
            logger.warning("[Experiment] replica %s: vanishing tail increment, slope undefined", replica)
        frame = pd.DataFrame({"delta": deltas, "tail_increment": increments})
        return ReplicaResult(
            d, replica, frames={"tail_increments": frame}, metrics={"slope": slope, "max_increment": float(magnitude.max())}
        )

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:
        moments = levy_moments(config.driver_for_run())
        t = float(config.t_interval[0])
        delta = float(config.delta_schedule[0])
        cut = abs(config.tail_cut)
        metrics = {}
        checks = {}
        for d in sorted({r.rho for r in results}):
            tag = f"d={d:g}"
            slopes = [r.metrics["slope"] for r in results if r.rho == d]
            defined = [s for s in slopes if s is not None]
            metrics[f"min_slope[{tag}]"] = min(defined) if defined else None
            checks[f"slope[{tag}]"] = bool(defined) and len(defined) == len(slopes) and min(defined) - d >= self.thresholds["slope_minus_d"]

            single = truncation_tail_bound(moments, d, t, cut, delta)
            double = truncation_tail_bound(moments, d, t, cut, 2.0 * delta)
            linearity = abs(double / single - 2.0) if single > 0 else 0.0
            metrics[f"bound[{tag}]"] = single
            metrics[f"bound_linearity[{tag}]"] = linearity
            metrics[f"max_increment[{tag}]"] = max(r.metrics["max_increment"] for r in results if r.rho == d)
            checks[f"linearity[{tag}]"] = linearity <= self.thresholds["linearity"]

            far = truncation_tail_bound(moments, d, t, FAR_T, delta)
            near = truncation_tail_bound(moments, d, t, NEAR_T, delta)
            checks[f"decreasing_in_T[{tag}]"] = far < near
            metrics[f"default_truncation[{tag}]"] = default_truncation(moments, d, config.horizon, config.horizon)
        return ExperimentOutcome(metrics=metrics, checks=checks)


register_plugin(TailBoundPlugin())

__all__ = ["TailBoundPlugin"]
