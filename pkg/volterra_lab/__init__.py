"""Simulation and regularity diagnostics for Volterra processes driven by jump paths."""

__version__ = "0.1.0"
