# wickbench/quadrature.py
"""
Composite Gauss-Legendre rules shared by the real-time and Euclidean integrators.

Key Components:
- QuadratureControls: panel width, nodes per panel and evaluation budget
- gauss_legendre_panels: composite rule on an interval
- ordered_simplex_rule: iterated rule on upper > s1 > ... > sn > 0
- collapsed_simplex_rule: tensor rule mapped onto the same simplex
- refined: the same controls with halved panel width, for node-doubling estimates
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from wickbench.exceptions import QuadratureBudgetExceeded

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureControls:
    """Controls for composite Gauss-Legendre integration."""

    panel_width: float = 0.5
    order: int = 8
    max_evaluations: int = 2_000_000

    def __post_init__(self) -> None:
        if self.panel_width <= 0:
            raise ValueError(f"panel_width must be positive, got {self.panel_width}")
        if self.order < 1:
            raise ValueError(f"order must be at least 1, got {self.order}")

    def refined(self) -> "QuadratureControls":
        """Controls with the panel width halved."""
        return replace(self, panel_width=self.panel_width / 2)


@lru_cache(maxsize=16)
def reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_edges(a: float, b: float, max_width: float) -> np.ndarray:
    """Equally spaced panel edges on [a, b] with width at most max_width."""
    count = max(1, math.ceil((b - a) / max_width - 1e-12))
    return np.linspace(a, b, count + 1)


def gauss_legendre_panels(
    a: float, b: float, max_width: float, order: int = 8
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite Gauss-Legendre nodes and weights on [a, b].

    Args:
        a: Lower limit
        b: Upper limit (b >= a)
        max_width: Largest allowed panel width
        order: Nodes per panel

    Returns:
        Tuple of (nodes, weights), nodes increasing and strictly inside (a, b)
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    x, w = reference_rule(order)
    edges = panel_edges(a, b, max_width)
    left, right = edges[:-1, None], edges[1:, None]
    half = (right - left) / 2
    nodes = (left + half * (x[None, :] + 1)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def ordered_simplex_rule(
    n: int, upper: float, controls: QuadratureControls
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Iterated rule on the ordered simplex upper > s1 > s2 > ... > sn > 0.

    Every coordinate is a Gauss-Legendre node strictly inside its own interval, so
    nodes never tie.

    Returns:
        Tuple of (nodes with shape (N, n), weights with shape (N,))

    Raises:
        QuadratureBudgetExceeded: if the rule would exceed controls.max_evaluations
    """
    if n == 0:
        return np.zeros((1, 0)), np.ones(1)

    per_axis = max(1, math.ceil(upper / controls.panel_width)) * controls.order
    estimate = per_axis**n / math.factorial(n)
    if estimate > controls.max_evaluations:
        raise QuadratureBudgetExceeded(
            f"simplex rule of dimension {n} needs about {estimate:.3g} nodes "
            f"(budget {controls.max_evaluations})"
        )

    nodes, weights = gauss_legendre_panels(
        0.0, upper, controls.panel_width, controls.order
    )
    points = nodes[:, None]
    total = weights
    for _ in range(1, n):
        grown_points, grown_weights = [], []
        for row, weight in zip(points, total):
            inner, inner_w = gauss_legendre_panels(
                0.0, row[-1], controls.panel_width, controls.order
            )
            grown_points.append(
                np.column_stack([np.repeat(row[None, :], inner.size, axis=0), inner])
            )
            grown_weights.append(weight * inner_w)
        points = np.vstack(grown_points)
        total = np.concatenate(grown_weights)

    logger.debug(f"Simplex rule n={n} upper={upper:.4g}: {total.size} nodes")
    return points, total


def collapsed_simplex_rule(
    n: int, upper: float, controls: QuadratureControls
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Tensor rule on [0, 1]^n mapped onto upper > s1 > ... > sn > 0 by s_k = s_{k−1} u_k.

    The map has Jacobian upper^n Π u_k^{n−k}. Each axis carries controls.order + 1
    nodes per panel, so no node is shared with ordered_simplex_rule.

    Returns:
        Tuple of (nodes with shape (N, n), weights with shape (N,))

    Raises:
        QuadratureBudgetExceeded: if the rule would exceed controls.max_evaluations
    """
    if n == 0:
        return np.zeros((1, 0)), np.ones(1)

    u, w = gauss_legendre_panels(0.0, 1.0, controls.panel_width / upper, controls.order + 1)
    if u.size**n > controls.max_evaluations:
        raise QuadratureBudgetExceeded(
            f"collapsed rule of dimension {n} needs {u.size**n} nodes "
            f"(budget {controls.max_evaluations})"
        )

    us = np.stack([g.ravel() for g in np.meshgrid(*([u] * n), indexing="ij")], axis=1)
    ws = np.stack([g.ravel() for g in np.meshgrid(*([w] * n), indexing="ij")], axis=1)
    points = upper * np.cumprod(us, axis=1)
    jacobian = upper**n * np.prod(us[:, :-1] ** np.arange(n - 1, 0, -1), axis=1)
    return points, np.prod(ws, axis=1) * jacobian


def splitting_identity_residual(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    n: int,
    m: int,
    upper: float,
    controls: QuadratureControls,
) -> float:
    """
    Compare both sides of the simplex splitting identity.

    Σ_{|J|=m} ∫_{Δ^n} f(s_J) g(s_{J^c}) ds = ∫_{Δ^m} f · ∫_{Δ^{n-m}} g, with J running
    over increasing index subsets. f and g take node arrays of shape (N, m) and
    (N, n - m) and return N values.
    """
    if not 1 <= m <= n - 1:
        raise ValueError(f"need 1 <= m <= n - 1, got m={m}, n={n}")
    nodes, weights = ordered_simplex_rule(n, upper, controls)
    left = 0.0 + 0.0j
    for subset in itertools.combinations(range(n), m):
        rest = [k for k in range(n) if k not in subset]
        left += np.dot(weights, f(nodes[:, list(subset)]) * g(nodes[:, rest]))

    f_nodes, f_weights = ordered_simplex_rule(m, upper, controls)
    g_nodes, g_weights = ordered_simplex_rule(n - m, upper, controls)
    right = np.dot(f_weights, f(f_nodes)) * np.dot(g_weights, g(g_nodes))
    return float(abs(left - right))
