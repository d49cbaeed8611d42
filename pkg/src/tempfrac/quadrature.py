"""Shared panel-quadrature building blocks.

Gauss-Legendre panels for smooth pieces, Gauss-Jacobi panels where an
algebraic endpoint factor needs absorbing, and dyadic edge refinement toward
integrable singularities or kinks.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=256)
def gauss_jacobi(n: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [-1, 1] for the weight (1 + x)^beta."""
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


def panel_nodes(edges: np.ndarray, n: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panels."""
    x, w = gauss_legendre(n)
    a = edges[:-1]
    half = 0.5 * (edges[1:] - a)
    nodes = a[:, None] + half[:, None] * (x[None, :] + 1.0)
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def integrate_panels(fun, edges, n: int = 32) -> float:
    nodes, weights = panel_nodes(np.asarray(edges, dtype=float), n)
    return float(np.dot(weights, fun(nodes)))


def jacobi_endpoint_integral(fun, a: float, b: float, beta: float, n: int = 32) -> float:
    """Integral over [a, b] of (t - a)^beta * fun(t).

    ``fun`` must be smooth on the closed panel; the algebraic factor is part
    of the quadrature weight and must not appear in ``fun``.
    """
    x, w = gauss_jacobi(n, beta)
    half = 0.5 * (b - a)
    t = a + half * (x + 1.0)
    scale = half ** (beta + 1.0)
    return float(scale * np.dot(w, fun(t)))


def dyadic_edges(a: float, b: float, levels: int, toward: str = "left") -> np.ndarray:
    """Panel edges on [a, b], halving toward one endpoint.

    ``toward='left'`` returns a, a + (b-a)/2^levels, ..., b with geometric
    clustering at a.
    """
    span = b - a
    fracs = 0.5 ** np.arange(levels, -1, -1.0)
    if toward == "left":
        return np.concatenate([[a], a + span * fracs])
    return np.concatenate([b - span * fracs[::-1], [b]])


def geometric_edges(a: float, b: float, ratio: float = 2.0) -> np.ndarray:
    """Edges a, a*ratio, ... capped at b (requires 0 < a < b)."""
    edges = [a]
    while edges[-1] * ratio < b:
        edges.append(edges[-1] * ratio)
    edges.append(b)
    return np.array(edges)
