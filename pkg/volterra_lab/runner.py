"""Experiment runner: config loading, replica execution and artifact output.

A run reads one JSON config, executes every (kernel index, replica) task of the
configured experiment on a thread pool, and writes the collected frames as CSV
files plus a ``manifest.json`` summary into the output directory. Nothing in the
artifacts depends on wall-clock time, so the same config and seed reproduce the
same bytes.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import __version__
from .config import settings
from .errors import AcceptanceFailure, ConfigError, KernelInvariantError, QuadratureError
from .experiments import ExperimentTask, ReplicaResult, get_plugin, load_default_plugins
from .schemas import ExperimentConfig

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CONFIG = 2
EXIT_ACCEPTANCE = 3
EXIT_NUMERICAL = 4

MANIFEST_NAME = "manifest.json"


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------


def _line_of(text: str, loc) -> int:
    """Line of the innermost key of ``loc`` found in ``text``, searching key by key."""

    pos, found = 0, 0
    for part in loc:
        if not isinstance(part, str):
            continue
        hit = text.find(f'"{part}"', pos)
        if hit < 0:
            break
        pos = found = hit
    return text.count("\n", 0, found) + 1


def _findings(path: str, text: str, exc: ValidationError) -> List[str]:
    out = []
    for err in exc.errors():
        loc = tuple(err.get("loc", ()))
        where = ".".join(str(p) for p in loc) or "<config>"
        out.append(f"{path}:{_line_of(text, loc)}: {where}: {err['msg']}")
    return out


def load_config(path: str | Path, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError with one line per finding."""

    path = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: the config must be a JSON object")

    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("\n".join(_findings(path, text, exc))) from exc


def validate(path: str | Path) -> List[str]:
    """Schema and invariant check without running; returns the findings (empty when valid)."""

    try:
        load_config(path)
    except ConfigError as exc:
        return str(exc).splitlines()
    return []


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    exit_code: int
    out_dir: Path
    manifest: Dict[str, Any]
    artifacts: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_PASS

    def raise_for_status(self) -> None:
        if self.exit_code == EXIT_ACCEPTANCE:
            failed = [name for name, ok in self.manifest["checks"].items() if not ok]
            raise AcceptanceFailure(f"{self.manifest['experiment']} failed: {', '.join(failed)}")
        if self.exit_code == EXIT_NUMERICAL:
            raise AcceptanceFailure(f"{self.manifest['experiment']} aborted: {self.manifest.get('error')}")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def collect_frames(results: List[ReplicaResult]) -> Dict[str, pd.DataFrame]:
    """Concatenate frames by name in task order, with ``rho`` and ``replica`` leading."""

    pieces: Dict[str, List[pd.DataFrame]] = {}
    for result in results:
        for name, frame in result.frames.items():
            frame = frame.copy()
            frame.insert(0, "replica", result.replica)
            frame.insert(0, "rho", result.rho)
            pieces.setdefault(name, []).append(frame)
    return {name: pd.concat(parts, ignore_index=True) for name, parts in pieces.items()}


def _write_manifest(out_dir: Path, manifest: Dict[str, Any]) -> None:
    text = json.dumps(_jsonable(manifest), indent=2, sort_keys=True, allow_nan=False)
    (out_dir / MANIFEST_NAME).write_text(text + "\n", encoding="utf-8")


def run(config: ExperimentConfig, out_dir: str | Path | None = None) -> RunResult:
    """Run every task of ``config``, write the CSVs and the manifest, and return the exit status."""

    load_default_plugins()
    plugin = get_plugin(config.experiment)
    if not plugin:
        raise ConfigError(f"experiment: '{config.experiment}' is not registered")

    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [
        ExperimentTask(config, rho, replica)
        for rho in config.rho_values()
        for replica in range(plugin.replica_count(config))
    ]
    logger.info("[Runner] %s: %s tasks on %s workers -> %s", config.experiment, len(tasks), settings.MAX_WORKERS, out)

    manifest: Dict[str, Any] = {
        "experiment": config.experiment,
        "version": __version__,
        "config": config.model_dump(mode="json"),
        "thresholds": plugin.thresholds_for(config),
    }
    try:
        with ThreadPoolExecutor(max_workers=settings.MAX_WORKERS) as pool:
            results = list(pool.map(ExperimentTask.execute, tasks))
        outcome = plugin.summarize(config, results)
    except (QuadratureError, KernelInvariantError) as exc:
        logger.error("[Runner] %s aborted: %s", config.experiment, exc)
        manifest.update(metrics={}, checks={}, passed=False, exit_code=EXIT_NUMERICAL, artifacts=[], error=str(exc))
        _write_manifest(out, manifest)
        return RunResult(EXIT_NUMERICAL, out, manifest)

    artifacts = []
    for name, frame in collect_frames(results).items():
        filename = f"{name}.csv"
        frame.to_csv(out / filename, index=False, float_format="%.17g", lineterminator="\n")
        artifacts.append(filename)

    exit_code = EXIT_PASS if outcome.passed else EXIT_ACCEPTANCE
    manifest.update(
        metrics=outcome.metrics,
        checks=outcome.checks,
        passed=outcome.passed,
        exit_code=exit_code,
        artifacts=artifacts,
    )
    _write_manifest(out, manifest)

    if outcome.passed:
        logger.info("[Runner] %s passed (%s checks)", config.experiment, len(outcome.checks))
    else:
        failed = [name for name, ok in outcome.checks.items() if not ok]
        logger.warning("[Runner] %s failed: %s", config.experiment, ", ".join(failed))
    return RunResult(exit_code, out, manifest, artifacts)


def run_path(
    path: str | Path,
    out_dir: Optional[str] = None,
    seed: Optional[int] = None,
    replicas: Optional[int] = None,
) -> int:
    """Load, run and map every failure to an exit code; used by the command line."""

    try:
        config = load_config(path, {"out_dir": out_dir, "seed": seed, "replicas": replicas})
        return run(config).exit_code
    except ValueError as exc:
        # ConfigError, DriverError, DiagnosticError and KernelDomainError are all ValueErrors
        for line in str(exc).splitlines():
            logger.error("[Runner] %s", line)
        return EXIT_CONFIG
    except (QuadratureError, KernelInvariantError) as exc:
        logger.error("[Runner] numerical failure: %s", exc)
        return EXIT_NUMERICAL


__all__ = [
    "EXIT_ACCEPTANCE",
    "EXIT_CONFIG",
    "EXIT_NUMERICAL",
    "EXIT_PASS",
    "MANIFEST_NAME",
    "RunResult",
    "collect_frames",
    "load_config",
    "run",
    "run_path",
    "validate",
]
