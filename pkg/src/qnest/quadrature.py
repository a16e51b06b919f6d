"""Small deterministic quadrature helpers shared by ground truths and exact level means."""

from __future__ import annotations

import numpy as np

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def composite_rule(lo: float, hi: float, panels: int = 200, order: int = 8,
                   breakpoints=()) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [lo, hi]; panel edges include ``breakpoints``."""
    edges = np.linspace(lo, hi, panels + 1)
    extra = [b for b in breakpoints if lo < b < hi]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    t, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * t
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def integrate_pieces(f, endpoints: np.ndarray, order: int = 12) -> np.ndarray:
    """Integrate ``f`` over consecutive intervals of sorted ``endpoints`` (shape (B, P)).

    ``f`` maps an array of abscissae of shape (B, P-1, order) to values of the
    same shape; returns the per-row sum of all piece integrals, shape (B,).
    Zero-length pieces contribute nothing, which keeps the call vectorized
    when rows have different numbers of effective breakpoints.
    """
    t, w = gauss_legendre(order)
    a = endpoints[:, :-1, None]
    b = endpoints[:, 1:, None]
    z = 0.5 * (a + b) + 0.5 * (b - a) * t
    vals = f(z)
    return np.sum(vals * (0.5 * (b - a) * w), axis=(1, 2))
