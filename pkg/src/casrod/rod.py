"""Kirchhoff rod kinematics and constitutive law.

The rod axis is a plane NURBS curve reparametrized by arc length s. The local
frame is the unit tangent a1 and the unit normal a2 = rot90(a1) (counter-
clockwise pair). Membrane strain eps = a1 . du/ds and bending strain
kappa = a2 . d2u/ds2 + da2/ds . du/ds; stress resultants are N = EA*eps and
M = EI*kappa.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParametrizationError
from .splines import NurbsCurve, nurbs_basis, nurbs_basis_many

__all__ = [
    "ROT90",
    "GeometryFrame",
    "FrameBatch",
    "CrossSection",
    "ControlDisplacements",
    "frame_at",
    "frames_at",
    "membrane_strain",
    "bending_strain",
    "stress_resultants",
]

# 90-degree counterclockwise rotation; maps a1 to a2.
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])

_MIN_JACOBIAN = 1e-14


@dataclass
class GeometryFrame:
    """Local frame and arc-length basis derivatives at one parametric point.

    Attributes:
        a1: unit tangent.
        a2: unit normal (90-degree CCW rotation of a1).
        da2_ds: arc-length derivative of a2.
        jac: parametric speed ds/dxi.
        dN_ds: arc-length first derivatives of the active basis functions.
        d2N_ds2: arc-length second derivatives of the active basis functions.
        first_active: index of the first active basis function.
    """

    a1: np.ndarray
    a2: np.ndarray
    da2_ds: np.ndarray
    jac: float
    dN_ds: np.ndarray
    d2N_ds2: np.ndarray
    first_active: int


@dataclass(frozen=True)
class CrossSection:
    """Axial stiffness EA and bending stiffness EI of the cross section."""

    ea: float
    ei: float

    def __post_init__(self):
        if self.ea <= 0.0 or self.ei <= 0.0:
            raise ValueError("EA and EI must be positive")

    @classmethod
    def rectangular(cls, young_modulus: float, thickness: float, width: float) -> CrossSection:
        """Rectangular section: A = t*d and I = t^3*d/12."""
        area = thickness * width
        inertia = thickness**3 * width / 12.0
        return cls(young_modulus * area, young_modulus * inertia)


@dataclass
class ControlDisplacements:
    """Displacement control variables, one 2-vector per basis function."""

    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.ndim != 2 or self.u.shape[1] != 2:
            raise ValueError("expected an (n, 2) array of control displacements")

    def active(self, frame: GeometryFrame) -> np.ndarray:
        """Rows of u for the basis functions active in the given frame."""
        return self.u[frame.first_active:frame.first_active + len(frame.dN_ds)]


def frame_at(curve: NurbsCurve, xi: float) -> GeometryFrame:
    """Evaluate the local frame and arc-length basis derivatives at xi.

    The chain rule from the parametric coordinate to arc length gives
    dN/ds = N' / jac and d2N/ds2 = N'' / jac^2 - N' (r' . r'') / jac^4,
    with jac = ||r'||. da2/ds is the rotated tangent rate, computed exactly
    from r'' rather than by numerical differentiation.
    """
    be = nurbs_basis(curve, xi, max_deriv=2)
    q = curve.control_points[be.first_active:be.first_active + curve.degree + 1]
    r1 = be.d1 @ q
    r2 = be.d2 @ q
    jac = float(np.hypot(r1[0], r1[1]))
    if jac < _MIN_JACOBIAN:
        raise DegenerateParametrizationError(f"zero parametric speed at xi={xi}")
    a1 = r1 / jac
    a2 = ROT90 @ a1
    # da1/ds: normal projection of r'' scaled by jac^2.
    da1_ds = (r2 - a1 * (a1 @ r2)) / jac**2
    da2_ds = ROT90 @ da1_ds
    rdot = r1 @ r2
    dn_ds = be.d1 / jac
    d2n_ds2 = be.d2 / jac**2 - be.d1 * (rdot / jac**4)
    return GeometryFrame(a1, a2, da2_ds, jac, dn_ds, d2n_ds2, be.first_active)


@dataclass
class FrameBatch:
    """Vectorized frames: row i of every array belongs to the i-th point."""

    first_active: np.ndarray   # (m,) int
    a1: np.ndarray             # (m, 2)
    a2: np.ndarray             # (m, 2)
    da2_ds: np.ndarray         # (m, 2)
    jac: np.ndarray            # (m,)
    dN_ds: np.ndarray          # (m, p+1)
    d2N_ds2: np.ndarray        # (m, p+1)

    def __len__(self) -> int:
        return len(self.jac)

    def frame(self, i: int) -> GeometryFrame:
        return GeometryFrame(self.a1[i], self.a2[i], self.da2_ds[i], float(self.jac[i]),
                             self.dN_ds[i], self.d2N_ds2[i], int(self.first_active[i]))


def frames_at(curve: NurbsCurve, xis) -> FrameBatch:
    """Vectorized frame_at over an array of parametric points."""
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    bb = nurbs_basis_many(curve, xis, max_deriv=2)
    q = curve.control_points[bb.first_active[:, None] + np.arange(curve.degree + 1)]
    r1 = np.einsum("mj,mjc->mc", bb.d1, q)
    r2 = np.einsum("mj,mjc->mc", bb.d2, q)
    jac = np.hypot(r1[:, 0], r1[:, 1])
    if np.any(jac < _MIN_JACOBIAN):
        raise DegenerateParametrizationError("zero parametric speed in batch")
    a1 = r1 / jac[:, None]
    a2 = a1 @ ROT90.T
    proj = np.einsum("mc,mc->m", a1, r2)
    da1_ds = (r2 - a1 * proj[:, None]) / jac[:, None] ** 2
    da2_ds = da1_ds @ ROT90.T
    rdot = np.einsum("mc,mc->m", r1, r2)
    dn_ds = bb.d1 / jac[:, None]
    d2n_ds2 = bb.d2 / jac[:, None] ** 2 - bb.d1 * (rdot / jac**4)[:, None]
    return FrameBatch(bb.first_active, a1, a2, da2_ds, jac, dn_ds, d2n_ds2)


def membrane_strain(frame: GeometryFrame, u_active: np.ndarray) -> float:
    """eps = a1 . sum_b dN_b/ds U_b for the active control displacements."""
    return float(frame.a1 @ (frame.dN_ds @ u_active))


def bending_strain(frame: GeometryFrame, u_active: np.ndarray) -> float:
    """kappa = a2 . sum_b d2N_b/ds2 U_b + da2/ds . sum_b dN_b/ds U_b."""
    return float(frame.a2 @ (frame.d2N_ds2 @ u_active) + frame.da2_ds @ (frame.dN_ds @ u_active))


def stress_resultants(section: CrossSection, eps: float, kappa: float) -> tuple[float, float]:
    """Membrane force N = EA*eps and bending moment M = EI*kappa."""
    return section.ea * eps, section.ei * kappa
