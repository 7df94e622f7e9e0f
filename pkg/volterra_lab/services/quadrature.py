"""
Composite Gauss–Legendre quadrature for integrands with a power-law endpoint singularity.

Every singular integral in the package goes through ``graded_quad``:

* the integration range is cut into pieces at caller breakpoints (jump locations of a
  piecewise-constant driver) and, optionally, at geometric grading points so that slowly
  decaying tails are resolved on a logarithmic scale;
* the first piece is mapped with ``x = a + L * w**q``, q an integer multiple of 1/p, which
  turns an integrand that behaves like ``(x - a)**(p - 1)`` into a polynomial in w;
* all pieces are refined together by doubling the panel count until two successive
  estimates agree, or the node cap is hit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import special

from ..config import settings
from ..errors import QuadratureError

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadResult:
    value: float
    nodes: int
    error_estimate: float


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""

    nodes, weights = special.roots_legendre(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _panel_nodes(edges: np.ndarray, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = gauss_legendre(order)
    lo, hi = edges[:-1], edges[1:]
    frac = np.arange(panels + 1) / panels
    sub = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    half = 0.5 * (sub[:, 1:] - sub[:, :-1])
    mid = 0.5 * (sub[:, 1:] + sub[:, :-1])
    x = mid[..., None] + half[..., None] * nodes
    w = half[..., None] * weights
    return x.ravel(), w.ravel()


def _singular_piece(a: float, b: float, exponent: float, panels: int, order: int):
    # x = a + L * w**q with q = m / exponent, m = max(3, ceil(3 * exponent)): the singular
    # factor turns into w**(m-1), which also flattens logarithmic factors, and the regular
    # part of the integrand picks up at least w**2.
    q = max(3, math.ceil(3.0 * exponent - 1e-12)) / exponent
    w_nodes, w_weights = _panel_nodes(np.array([0.0, 1.0]), panels, order)
    length = b - a
    x = a + length * w_nodes**q
    jac = length * q * w_nodes ** (q - 1.0)
    return x, w_weights * jac


def grading_points(a: float, b: float, scale: float) -> np.ndarray:
    """Geometric points a + scale * 2**k strictly inside (a, b)."""

    if scale <= 0 or b - a <= scale:
        return np.empty(0)
    count = int(np.floor(np.log2((b - a) / scale))) + 1
    pts = a + scale * 2.0 ** np.arange(count)
    return pts[pts < b]


def graded_quad(
    func: Integrand,
    a: float,
    b: float,
    *,
    exponent: float = 1.0,
    breakpoints: Optional[Iterable[float]] = None,
    grading_scale: Optional[float] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
    order: Optional[int] = None,
    max_nodes: Optional[int] = None,
    label: str = "integral",
) -> QuadResult:
    """Integrate ``func`` over [a, b] where ``func(x) ~ (x - a)**(exponent - 1)`` near a.

    ``exponent`` lies in (0, 1] for singular integrands; values above 1 describe a
    vanishing integrand and are regularised the same way.
    """

    if b < a:
        raise ValueError(f"{label}: upper limit {b} below lower limit {a}")
    if b == a:
        return QuadResult(0.0, 0, 0.0)
    if exponent <= 0:
        raise ValueError(f"{label}: singularity exponent must be positive, got {exponent}")

    rtol = settings.QUAD_RTOL if rtol is None else rtol
    atol = settings.QUAD_ATOL if atol is None else atol
    order = settings.QUAD_ORDER if order is None else order
    max_nodes = settings.QUAD_MAX_NODES if max_nodes is None else max_nodes

    cuts = [] if breakpoints is None else [float(p) for p in breakpoints]
    if grading_scale is not None:
        cuts.extend(grading_points(a, b, grading_scale).tolist())
    inner = np.unique(np.asarray([c for c in cuts if a < c < b], dtype=float))
    edges = np.concatenate(([a], inner, [b]))

    panels = 1
    previous: Optional[float] = None
    last_two: Optional[tuple[float, float]] = None
    while True:
        x0, w0 = _singular_piece(edges[0], edges[1], exponent, panels, order)
        if edges.size > 2:
            x1, w1 = _panel_nodes(edges[1:], panels, order)
            x = np.concatenate((x0, x1))
            w = np.concatenate((w0, w1))
        else:
            x, w = x0, w0

        if x.size > max_nodes:
            raise QuadratureError(
                f"{label}: no convergence before the node cap",
                interval=(a, b),
                nodes=int(x.size),
                estimates=last_two,
            )

        estimate = float(np.dot(w, func(x)))
        if not np.isfinite(estimate):
            raise QuadratureError(
                f"{label}: integrand produced a non-finite value",
                interval=(a, b),
                nodes=int(x.size),
            )
        if previous is not None:
            diff = abs(estimate - previous)
            if diff <= max(atol, rtol * abs(estimate)):
                return QuadResult(estimate, int(x.size), diff)
            last_two = (previous, estimate)
        previous = estimate
        panels *= 2
        logger.debug("[Quadrature] %s: doubling to %s panels per piece", label, panels)


__all__ = ["QuadResult", "gauss_legendre", "grading_points", "graded_quad"]
