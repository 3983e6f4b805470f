"""Gauss-Legendre quadrature rules on the parent domain [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureRule", "gauss_rule"]


@dataclass(frozen=True)
class QuadratureRule:
    """Abscissae and weights on [-1, 1]; weights sum to 2."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.points)


def gauss_rule(n_pts: int) -> QuadratureRule:
    """Standard Gauss-Legendre rule with 1..10 points (exactness degree 2n-1)."""
    if not 1 <= n_pts <= 10:
        raise ValueError(f"n_pts must be between 1 and 10, got {n_pts}")
    pts, wts = np.polynomial.legendre.leggauss(n_pts)
    return QuadratureRule(pts, wts)
