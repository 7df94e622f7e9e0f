"""Exception hierarchy shared by the services, the runner and the CLI."""

from __future__ import annotations


class VolterraLabError(Exception):
    """Base class for every error raised by volterra_lab."""


class ConfigError(VolterraLabError, ValueError):
    """An experiment config or a function argument violates a documented precondition."""


class KernelDomainError(VolterraLabError, ValueError):
    """A kernel was queried outside the region where it (or a partial) is defined."""


class KernelInvariantError(VolterraLabError):
    """A kernel broke one of its structural invariants (positivity, diagonal zero, f != 0)."""


class DriverError(VolterraLabError, ValueError):
    """Invalid driver specification or query outside the path horizon."""


class DiagnosticError(VolterraLabError, ValueError):
    """A regularity scan was asked for something its inputs cannot support."""


class QuadratureError(VolterraLabError, ArithmeticError):
    """Panel doubling hit the node cap before two successive estimates agreed."""

    def __init__(
        self,
        message: str,
        *,
        interval: tuple[float, float] | None = None,
        nodes: int | None = None,
        estimates: tuple[float, float] | None = None,
        context: dict | None = None,
    ):
        super().__init__(message)
        self.interval = interval
        self.nodes = nodes
        self.estimates = estimates
        self.context = dict(context or {})

    def __str__(self) -> str:
        parts = [super().__str__()]
        if self.interval is not None:
            parts.append(f"interval=[{self.interval[0]:.6g}, {self.interval[1]:.6g}]")
        if self.nodes is not None:
            parts.append(f"nodes={self.nodes}")
        if self.estimates is not None:
            parts.append(f"last estimates={self.estimates[0]:.12g}, {self.estimates[1]:.12g}")
        for key, value in self.context.items():
            parts.append(f"{key}={value}")
        return "; ".join(parts)


class AcceptanceFailure(VolterraLabError):
    """An experiment ran to completion but missed one of its acceptance thresholds."""


__all__ = [
    "VolterraLabError",
    "ConfigError",
    "KernelDomainError",
    "KernelInvariantError",
    "DriverError",
    "DiagnosticError",
    "QuadratureError",
    "AcceptanceFailure",
]
