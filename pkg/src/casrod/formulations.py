"""Element stiffness construction for the six element formulations.

All formulations share the same bending stiffness; they differ only in how the
membrane strain enters the membrane energy:

    nurbs         compatible strain, full (p+1)-point integration
    nurbs-reduced compatible strain, 2-point integration
    cas           assumed strain = linear interpolant of the compatible strain
                  at the element's end knots (C0 across elements thanks to the
                  C1 displacement continuity of quadratic NURBS)
    local-bbar    assumed strain = element-local L2 projection onto linears
    local-ans     assumed strain = linear interpolant through the compatible
                  strain at the two 2-point Gauss abscissae of the element
    global-bbar   assumed strain = patch-level L2 projection onto C0
                  piecewise linears with nodes at the knots (dense stiffness)

This module also provides post-solve recovery of the membrane force (through
the formulation's own strain representation) and of the bending moment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import solveh_banded

from .quadrature import QuadratureRule, gauss_rule
from .rod import CrossSection, FrameBatch, frames_at
from .splines import NurbsCurve, nurbs_basis_many

__all__ = [
    "ElementFormulation",
    "ElementMatrices",
    "PatchOperators",
    "element_stiffness_standard",
    "element_stiffness_cas",
    "element_stiffness_local_bbar",
    "element_stiffness_local_ans",
    "patch_stiffness_global_bbar",
    "membrane_force_field",
    "bending_moment_field",
]

_GAUSS2_NODE = 1.0 / math.sqrt(3.0)


class ElementFormulation(Enum):
    """Element formulation selector."""

    NURBS_FULL = "nurbs"
    NURBS_REDUCED = "nurbs-reduced"
    CAS = "cas"
    LOCAL_BBAR = "local-bbar"
    LOCAL_ANS = "local-ans"
    GLOBAL_BBAR = "global-bbar"

    def default_quad_points(self, degree: int = 2) -> int:
        """Default rule: p+1 points, except 2 for reduced integration."""
        return 2 if self is ElementFormulation.NURBS_REDUCED else degree + 1


@dataclass
class ElementMatrices:
    """Element stiffness block, load block, and global dof indices."""

    k: np.ndarray
    f: np.ndarray
    dof_map: np.ndarray


def _membrane_rows(fb: FrameBatch) -> np.ndarray:
    """Strain-displacement rows eps = row . u_e, interleaved (x, y) per function."""
    m = np.empty((len(fb), 2 * fb.dN_ds.shape[1]))
    m[:, 0::2] = fb.a1[:, 0:1] * fb.dN_ds
    m[:, 1::2] = fb.a1[:, 1:2] * fb.dN_ds
    return m


def _bending_rows(fb: FrameBatch) -> np.ndarray:
    """Strain-displacement rows kappa = row . u_e."""
    b = np.empty((len(fb), 2 * fb.dN_ds.shape[1]))
    b[:, 0::2] = fb.a2[:, 0:1] * fb.d2N_ds2 + fb.da2_ds[:, 0:1] * fb.dN_ds
    b[:, 1::2] = fb.a2[:, 1:2] * fb.d2N_ds2 + fb.da2_ds[:, 1:2] * fb.dN_ds
    return b


def _linear_pair(xhat, node: float) -> np.ndarray:
    """Values of the two linear Lagrange polynomials with nodes at -node, +node."""
    xhat = np.asarray(xhat, dtype=float)
    return np.stack([(node - xhat) / (2.0 * node), (node + xhat) / (2.0 * node)], axis=-1)


class PatchOperators:
    """Stiffness construction and strain recovery for one discretized patch.

    All quadrature-point data is evaluated in one vectorized pass; the only
    extra work of CAS elements over plain NURBS elements is the basis/tangent
    evaluation at the element boundaries.
    """

    def __init__(self, curve: NurbsCurve, section: CrossSection,
                 formulation: ElementFormulation, quad_points: int | None = None):
        if curve.degree < 2:
            raise ValueError("Kirchhoff rod discretizations need C1 continuity "
                             f"(degree >= 2), got degree {curve.degree}")
        self.curve = curve
        self.section = section
        self.formulation = formulation
        self.n_quad = quad_points or formulation.default_quad_points(curve.degree)
        self.quad = gauss_rule(self.n_quad)

        p = curve.degree
        n_el = curve.n_elements
        nq = self.quad.n_points
        bp = np.asarray(curve.knot_vector.breakpoints, dtype=float)
        self._bp = bp
        halves = 0.5 * (bp[1:] - bp[:-1])
        mids = 0.5 * (bp[1:] + bp[:-1])
        self.xi_q = mids[:, None] + halves[:, None] * self.quad.points  # (n_el, nq)

        flat = self.xi_q.reshape(-1)
        fb = frames_at(curve, flat)
        vb = nurbs_basis_many(curve, flat, max_deriv=0)
        self.values = vb.values.reshape(n_el, nq, p + 1)
        self.mrows = _membrane_rows(fb).reshape(n_el, nq, 2 * (p + 1))
        self.brows = _bending_rows(fb).reshape(n_el, nq, 2 * (p + 1))
        self.wds = fb.jac.reshape(n_el, nq) * halves[:, None] * self.quad.weights

        self._kb = np.einsum("eq,eqi,eqj->eij", section.ei * self.wds,
                             self.brows, self.brows)
        self._km = None
        self._pair_rows = None
        self._bbar_proj = None
        self._patch_projection = None

        form = formulation
        if form in (ElementFormulation.NURBS_FULL, ElementFormulation.NURBS_REDUCED):
            self._km = np.einsum("eq,eqi,eqj->eij", section.ea * self.wds,
                                 self.mrows, self.mrows)
        elif form is ElementFormulation.CAS:
            self._pair_rows = self._cas_pair_rows()
            mass = self._pair_mass(node=1.0)
            self._km = section.ea * np.einsum("elm,eli,emj->eij", mass,
                                              self._pair_rows, self._pair_rows)
        elif form is ElementFormulation.LOCAL_ANS:
            self._pair_rows = self._ans_pair_rows(mids, halves)
            mass = self._pair_mass(node=_GAUSS2_NODE)
            self._km = section.ea * np.einsum("elm,eli,emj->eij", mass,
                                              self._pair_rows, self._pair_rows)
        elif form is ElementFormulation.LOCAL_BBAR:
            mass = self._pair_mass(node=1.0)
            lvals = _linear_pair(self.quad.points, 1.0)
            rhs = np.einsum("eq,ql,eqi->eli", self.wds, lvals, self.mrows)
            det = mass[:, 0, 0] * mass[:, 1, 1] - mass[:, 0, 1] * mass[:, 1, 0]
            assert np.all(det > 0.0), "singular element mass on a nonzero span"
            inv = np.empty_like(mass)
            inv[:, 0, 0] = mass[:, 1, 1]
            inv[:, 1, 1] = mass[:, 0, 0]
            inv[:, 0, 1] = -mass[:, 0, 1]
            inv[:, 1, 0] = -mass[:, 1, 0]
            inv /= det[:, None, None]
            self._bbar_proj = np.einsum("elm,emi->eli", inv, rhs)
            km = section.ea * np.einsum("elm,eli,emj->eij", mass,
                                        self._bbar_proj, self._bbar_proj)
            self._km = 0.5 * (km + km.transpose(0, 2, 1))
        elif form is not ElementFormulation.GLOBAL_BBAR:
            raise AssertionError(form)

    # -- precomputation helpers ----------------------------------------------

    def _pair_mass(self, node: float) -> np.ndarray:
        """Per-element 2x2 arc-measure mass of the linear pair functions."""
        lvals = _linear_pair(self.quad.points, node)
        return np.einsum("eq,ql,qm->elm", self.wds, lvals, lvals)

    def _cas_pair_rows(self) -> np.ndarray:
        """Membrane strain rows at both end knots of every element.

        Each boundary row is evaluated once (in the span to its right, last
        span for the end), then shared by the two adjacent elements, which
        keeps the assumed strain exactly continuous across elements. The
        basis function dropped when re-aligning a row to the neighboring
        element has zero arc-length derivative at the shared knot.
        """
        n_el = self.curve.n_elements
        fb = frames_at(self.curve, self._bp)
        rows = _membrane_rows(fb)
        expected = np.minimum(np.arange(n_el + 1), n_el - 1)
        assert np.array_equal(fb.first_active, expected)
        pair = np.zeros((n_el, 2, rows.shape[1]))
        pair[:, 0, :] = rows[:-1]
        if n_el > 1:
            pair[:-1, 1, 2:] = rows[1:-1, :-2]
        pair[-1, 1, :] = rows[-1]
        return pair

    def _ans_pair_rows(self, mids: np.ndarray, halves: np.ndarray) -> np.ndarray:
        """Membrane strain rows at the two 2-point Gauss abscissae per element."""
        n_el = self.curve.n_elements
        pts = (mids[:, None] + halves[:, None]
               * np.array([-_GAUSS2_NODE, _GAUSS2_NODE])).reshape(-1)
        fb = frames_at(self.curve, pts)
        assert np.array_equal(fb.first_active, np.repeat(np.arange(n_el), 2))
        return _membrane_rows(fb).reshape(n_el, 2, -1)

    # -- element blocks -------------------------------------------------------

    def dof_map(self, element: int) -> np.ndarray:
        return np.arange(2 * element, 2 * (element + self.curve.degree + 1))

    def element_matrices(self, element: int) -> ElementMatrices:
        k = self._kb[element]
        if self._km is not None:
            k = k + self._km[element]
        k = 0.5 * (k + k.T)  # remove contraction-order roundoff asymmetry
        dof_map = self.dof_map(element)
        return ElementMatrices(k=k, f=np.zeros(len(dof_map)), dof_map=dof_map)

    # -- patch-level membrane operator for the global B-bar method ------------

    def _global_projection(self):
        """Hat-function mass (banded) and strain integral matrix for the patch."""
        if self._patch_projection is None:
            n_el = self.curve.n_elements
            n_dof = 2 * self.curve.n_basis
            lvals = _linear_pair(self.quad.points, 1.0)
            gel = np.einsum("eq,ql,eqi->eli", self.wds, lvals, self.mrows)
            mel = self._pair_mass(node=1.0)
            g = np.zeros((n_el + 1, n_dof))
            main = np.zeros(n_el + 1)
            upper = np.zeros(n_el + 1)
            for e in range(n_el):
                g[e:e + 2, 2 * e:2 * e + gel.shape[2]] += gel[e]
                main[e] += mel[e, 0, 0]
                main[e + 1] += mel[e, 1, 1]
                upper[e + 1] += mel[e, 0, 1]
            ab = np.vstack([upper, main])  # upper banded form for solveh_banded
            self._patch_projection = (ab, g)
        return self._patch_projection

    def patch_membrane_matrix(self) -> np.ndarray:
        """Dense patch membrane stiffness EA * G^T M^-1 G (global B-bar)."""
        ab, g = self._global_projection()
        coeff = solveh_banded(ab, g)
        k = self.section.ea * g.T @ coeff
        return 0.5 * (k + k.T)

    # -- post-solve field recovery ---------------------------------------------

    def _elements_of(self, xis: np.ndarray) -> np.ndarray:
        e = np.searchsorted(self._bp, xis, side="right") - 1
        return np.clip(e, 0, self.curve.n_elements - 1)

    def _element_windows(self, u_flat: np.ndarray) -> np.ndarray:
        """Element dof vectors as sliding windows over the flat dof vector."""
        return sliding_window_view(u_flat, 2 * (self.curve.degree + 1))[::2]

    def membrane_strain_profile(self, u: np.ndarray, xis) -> np.ndarray:
        """Membrane strain at the given parametric points.

        Uses the formulation's own strain representation: the assumed strain
        for CAS / local B-bar / local ANS / global B-bar, the compatible
        strain for standard NURBS.
        """
        u_flat = np.asarray(u, dtype=float).reshape(-1)
        xis = np.atleast_1d(np.asarray(xis, dtype=float))
        form = self.formulation
        if form in (ElementFormulation.NURBS_FULL, ElementFormulation.NURBS_REDUCED):
            fb = frames_at(self.curve, xis)
            rows = _membrane_rows(fb)
            win = self._element_windows(u_flat)
            return np.einsum("mi,mi->m", rows, win[fb.first_active])

        e_idx = self._elements_of(xis)
        a = self._bp[e_idx]
        b = self._bp[e_idx + 1]
        xhat = 2.0 * (xis - a) / (b - a) - 1.0
        win = self._element_windows(u_flat)
        if form is ElementFormulation.GLOBAL_BBAR:
            ab, g = self._global_projection()
            nodal = solveh_banded(ab, g @ u_flat)
            coeff = np.stack([nodal[:-1], nodal[1:]], axis=1)
            node = 1.0
        elif form is ElementFormulation.LOCAL_BBAR:
            coeff = np.einsum("eli,ei->el", self._bbar_proj, win)
            node = 1.0
        else:  # CAS and local ANS share the interpolation structure
            coeff = np.einsum("eli,ei->el", self._pair_rows, win)
            node = _GAUSS2_NODE if form is ElementFormulation.LOCAL_ANS else 1.0
        lvals = _linear_pair(xhat, node)
        return np.einsum("ml,ml->m", lvals, coeff[e_idx])

    def bending_strain_profile(self, u: np.ndarray, xis) -> np.ndarray:
        """Compatible bending strain at the given parametric points."""
        u_flat = np.asarray(u, dtype=float).reshape(-1)
        xis = np.atleast_1d(np.asarray(xis, dtype=float))
        fb = frames_at(self.curve, xis)
        rows = _bending_rows(fb)
        win = self._element_windows(u_flat)
        return np.einsum("mi,mi->m", rows, win[fb.first_active])

    def membrane_force_profile(self, u: np.ndarray, xis) -> np.ndarray:
        return self.section.ea * self.membrane_strain_profile(u, xis)

    def bending_moment_profile(self, u: np.ndarray, xis) -> np.ndarray:
        return self.section.ei * self.bending_strain_profile(u, xis)


# -- free-function convenience wrappers ----------------------------------------


def element_stiffness_standard(curve: NurbsCurve, section: CrossSection,
                               element_index: int, quad: QuadratureRule) -> ElementMatrices:
    """Full/reduced-integration element stiffness (rule taken from `quad`)."""
    ops = PatchOperators(curve, section, ElementFormulation.NURBS_FULL,
                         quad_points=quad.n_points)
    return ops.element_matrices(element_index)


def element_stiffness_cas(curve: NurbsCurve, section: CrossSection,
                          element_index: int, quad: QuadratureRule) -> ElementMatrices:
    ops = PatchOperators(curve, section, ElementFormulation.CAS,
                         quad_points=quad.n_points)
    return ops.element_matrices(element_index)


def element_stiffness_local_bbar(curve: NurbsCurve, section: CrossSection,
                                 element_index: int, quad: QuadratureRule) -> ElementMatrices:
    ops = PatchOperators(curve, section, ElementFormulation.LOCAL_BBAR,
                         quad_points=quad.n_points)
    return ops.element_matrices(element_index)


def element_stiffness_local_ans(curve: NurbsCurve, section: CrossSection,
                                element_index: int, quad: QuadratureRule) -> ElementMatrices:
    ops = PatchOperators(curve, section, ElementFormulation.LOCAL_ANS,
                         quad_points=quad.n_points)
    return ops.element_matrices(element_index)


def patch_stiffness_global_bbar(curve: NurbsCurve, section: CrossSection,
                                quad: QuadratureRule) -> np.ndarray:
    """Global B-bar patch stiffness: dense membrane block plus standard bending."""
    ops = PatchOperators(curve, section, ElementFormulation.GLOBAL_BBAR,
                         quad_points=quad.n_points)
    k = ops.patch_membrane_matrix()
    for e in range(curve.n_elements):
        em = ops.element_matrices(e)
        sl = slice(em.dof_map[0], em.dof_map[-1] + 1)
        k[sl, sl] += em.k
    return k


def _as_control_array(u) -> np.ndarray:
    """Accept a RodSolution, ControlDisplacements, or plain array."""
    if hasattr(u, "displacements"):
        u = u.displacements
    if hasattr(u, "u"):
        u = u.u
    return np.asarray(u, dtype=float)


def membrane_force_field(formulation: ElementFormulation, curve: NurbsCurve,
                         section: CrossSection, u, xi,
                         quad_points: int | None = None) -> np.ndarray:
    """Membrane force N at xi, using the formulation's strain recovery."""
    ops = PatchOperators(curve, section, formulation, quad_points)
    return ops.membrane_force_profile(_as_control_array(u), xi)


def bending_moment_field(curve: NurbsCurve, section: CrossSection,
                         u, xi) -> np.ndarray:
    """Bending moment M = EI*kappa at xi (discontinuous across knots)."""
    ops = PatchOperators(curve, section, ElementFormulation.NURBS_FULL)
    return ops.bending_moment_profile(_as_control_array(u), xi)
