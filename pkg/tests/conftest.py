"""Shared geometry fixtures."""

import numpy as np
import pytest

from casrod import KnotVector, NurbsCurve, make_open_uniform_knot_vector

CONIC_W = np.sqrt(2.0) / 2.0


@pytest.fixture
def quarter_circle():
    """Unit quarter circle (first quadrant), one quadratic element."""
    return NurbsCurve(KnotVector(2, [0, 0, 0, 1, 1, 1]),
                      [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
                      [1.0, CONIC_W, 1.0])


@pytest.fixture
def quarter_ellipse():
    """Quarter ellipse with semi-axes 2 and 1, one quadratic element."""
    return NurbsCurve(KnotVector(2, [0, 0, 0, 1, 1, 1]),
                      [[-2.0, 0.0], [-2.0, 1.0], [0.0, 1.0]],
                      [1.0, CONIC_W, 1.0])


def straight_rod(n_elements: int, length: float = 1.0) -> NurbsCurve:
    """Uniformly parametrized straight rod along x."""
    kv = make_open_uniform_knot_vector(2, n_elements)
    from casrod import greville_abscissae

    x = length * greville_abscissae(kv)
    pts = np.column_stack([x, np.zeros_like(x)])
    return NurbsCurve(kv, pts, np.ones(kv.n_basis))


@pytest.fixture
def straight_rod_4():
    return straight_rod(4)
