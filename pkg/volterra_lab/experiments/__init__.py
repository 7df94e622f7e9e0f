"""Experiment plugin registry.

Each experiment registers an ``ExperimentPlugin`` that knows how to run one replica for one
kernel index and how to turn the collected replicas into metrics and pass/fail checks
against its acceptance thresholds. The runner binds plugins to configs through
``ExperimentTask`` and does all file output itself.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ..schemas import ExperimentConfig
from ..services.drivers import CadlagPath, simulate
from ..services.kernels import Kernel, kernel_from_config

logger = logging.getLogger(__name__)


@dataclass
class ReplicaResult:
    """Frames and scalar metrics produced by one replica at one kernel index."""

    rho: float
    replica: int
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ExperimentOutcome:
    metrics: Dict[str, Any]
    checks: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class ExperimentPlugin:
    """Base class for experiment plugins."""

    name: str = ""
    # acceptance thresholds, echoed into the manifest
    thresholds: Dict[str, float] = {}
    # deterministic experiments run a single replica per kernel index
    stochastic: bool = True

    def __init__(self, name: Optional[str] = None):
        if name:
            self.name = name

    def thresholds_for(self, config: ExperimentConfig) -> Dict[str, float]:
        return dict(self.thresholds)

    def replica_count(self, config: ExperimentConfig) -> int:
        return config.replicas if self.stochastic else 1

    def run_replica(self, config: ExperimentConfig, rho: float, replica: int) -> ReplicaResult:  # pragma: no cover - interface
        raise NotImplementedError

    def summarize(self, config: ExperimentConfig, results: List[ReplicaResult]) -> ExperimentOutcome:  # pragma: no cover - interface
        raise NotImplementedError

    # -- helpers shared by the built-ins ------------------------------------------

    def kernel(self, config: ExperimentConfig, rho: float) -> Kernel:
        return kernel_from_config(config.kernel_for(rho))

    def driver_path(self, config: ExperimentConfig, replica: int) -> CadlagPath:
        return simulate(config.driver_for_run(), (0.0, config.horizon), stream=replica)


# Global registry for plugins keyed by experiment name
EXPERIMENT_PLUGINS: Dict[str, ExperimentPlugin] = {}


def register_plugin(plugin: ExperimentPlugin):
    """Register a plugin instance by its declared name."""

    if not plugin.name:
        raise ValueError("Plugins must define a name before registration")

    EXPERIMENT_PLUGINS[plugin.name] = plugin
    logger.debug("Registered experiment plugin: %s", plugin.name)


def get_plugin(name: str) -> Optional[ExperimentPlugin]:
    """Return a plugin by name if registered."""

    return EXPERIMENT_PLUGINS.get(name)


@dataclass
class ExperimentTask:
    """One (kernel index, replica) unit of work for a config."""

    config: ExperimentConfig
    rho: float
    replica: int

    def execute(self) -> ReplicaResult:
        plugin = get_plugin(self.config.experiment)
        if not plugin:
            raise ValueError(f"Experiment '{self.config.experiment}' is not registered")

        logger.debug("[Experiment] %s rho=%g replica=%s", self.config.experiment, self.rho, self.replica)
        return plugin.run_replica(self.config, self.rho, self.replica)


def max_or_zero(values) -> float:
    arr = np.asarray(list(values), dtype=float)
    return float(np.max(arr)) if arr.size else 0.0


def load_default_plugins():
    """Import modules to populate the registry with built-ins."""

    from . import (  # noqa: F401
        by_parts_oracle,
        decomposition,
        functional_limits,
        lemma35,
        lemma36,
        smooth_variation,
        tail_bound,
        theorem1,
        theorem2,
        theorem3,
    )

    logger.debug("Loaded default experiments: %s", ", ".join(sorted(EXPERIMENT_PLUGINS.keys())))
    return EXPERIMENT_PLUGINS


__all__ = [
    "ExperimentOutcome",
    "ExperimentPlugin",
    "ExperimentTask",
    "EXPERIMENT_PLUGINS",
    "ReplicaResult",
    "get_plugin",
    "load_default_plugins",
    "max_or_zero",
    "register_plugin",
]
