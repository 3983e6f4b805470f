"""The three benchmark problems with exact/reference solutions.

Geometry placement and curve orientation are pinned by requiring the
closed-form solutions (point displacements, membrane force, bending moment,
including signs) to be reproduced by the discretization:

* Pinched ring, quarter model in the fourth quadrant: curve runs from the
  loaded point A = (R, 0) to B = (0, -R); the other half of each pinch load
  acts on the mirror halves, so the quarter carries P/2 at A pointing inward
  along the x-axis. phi is the angle measured from B.
* Clamped-clamped semicircular arch, half model: curve runs from the clamped
  base (-R, 0) to the crown (0, R); phi is measured from the base, and the
  distributed load (0, -q sin phi) is the vertical load q per unit horizontal
  length converted to arc-length density.
* Clamped elliptical arch: quarter ellipse from the clamped end (-a, 0) to
  the free end (0, b), vertical point load at the free end. No closed-form
  solution exists; free-end reference displacements come from a fine-mesh
  (Richardson-checked) CAS solve and the clamped-end resultants from static
  equilibrium: |N| = P and |M| = P*a.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import (
    LoadSpec,
    RodSolution,
    apply_constraints,
    assemble,
    clamped_end_constraints,
    solve,
    symmetry_end_constraints,
)
from .errors import MissingExactFieldError, OutOfDomainError
from .formulations import ElementFormulation, PatchOperators
from .rod import CrossSection
from .splines import KnotVector, NurbsCurve, evaluate_geometry, insert_knot

__all__ = [
    "BenchmarkProblem",
    "PointCheck",
    "SlendernessCase",
    "standard_slenderness_cases",
    "build_ring_quarter",
    "build_arch_half",
    "build_ellipse_quarter",
    "exact_fields",
    "ellipse_reference",
    "solve_problem",
]

_CONIC_WEIGHT = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class PointCheck:
    """A reference displacement value: u(xi) . direction == value."""

    label: str
    xi: float
    direction: tuple[float, float]
    value: float


@dataclass(frozen=True)
class SlendernessCase:
    """One slenderness setting of a benchmark (EA for the ring, t otherwise)."""

    label: str
    value: float


_STANDARD_CASES = {
    "ring": tuple(SlendernessCase(f"EA={v:g}", v) for v in (1e4, 1e6, 1e8)),
    "arch": tuple(SlendernessCase(f"t={v:g}", v) for v in (0.1, 0.01, 0.001)),
    "ellipse": tuple(SlendernessCase(f"t={v:g}", v)
                     for v in (0.4, 0.04, 0.004, 0.0004, 0.00004)),
}


def standard_slenderness_cases(problem: str) -> tuple[SlendernessCase, ...]:
    """The slenderness values each benchmark's studies sweep over."""
    try:
        return _STANDARD_CASES[problem]
    except KeyError:
        raise ValueError(f"unknown problem {problem!r}") from None


@dataclass
class BenchmarkProblem:
    """One benchmark: geometry, section, loads, constraints, exact solution."""

    name: str
    curve: NurbsCurve
    section: CrossSection
    loads: LoadSpec
    constraints: list
    angle_map: Callable[[float], float]          # xi -> phi
    angle_domain: tuple[float, float]
    slenderness: float                            # reporting value (EA or t)
    exact_u: Callable[[float], np.ndarray] | None = None   # phi -> (ux, uy)
    exact_n: Callable[[float], float] | None = None
    exact_m: Callable[[float], float] | None = None
    point_checks: list[PointCheck] = field(default_factory=list)

    @property
    def has_exact_fields(self) -> bool:
        return self.exact_n is not None or self.exact_m is not None or self.exact_u is not None


def _refine_to(base: NurbsCurve, n_elements: int) -> NurbsCurve:
    """Split the single-element conic into n equal parametric spans.

    Knot insertion leaves the geometry exact, so the refined curve still
    represents the conic to machine precision.
    """
    if n_elements < 1:
        raise ValueError(f"n_elements must be >= 1, got {n_elements}")
    curve = base
    for j in range(1, n_elements):
        curve = insert_knot(curve, j / n_elements)
    return curve


def build_ring_quarter(n_elements: int, ea: float) -> BenchmarkProblem:
    """Pinched circular ring, quarter model (P = R = EI = 1).

    Symmetry conditions at both ends; half of the pinch load, P/2 inward
    along x, acts at A = (R, 0). The section thickness entering the exact
    point values is estimated as t = sqrt(EI/EA).
    """
    if ea <= 0.0:
        raise ValueError(f"EA must be positive, got {ea}")
    p_load, radius, ei = 1.0, 1.0, 1.0
    base = NurbsCurve(
        KnotVector(2, [0, 0, 0, 1, 1, 1]),
        [[radius, 0.0], [radius, -radius], [0.0, -radius]],
        [1.0, _CONIC_WEIGHT, 1.0],
    )
    curve = _refine_to(base, n_elements)
    section = CrossSection(ea=ea, ei=ei)
    loads = LoadSpec(point_loads=[("start", np.array([-p_load / 2, 0.0]))])
    constraints = (symmetry_end_constraints(curve, "start")
                   + symmetry_end_constraints(curve, "end"))

    t_over_r_sq = ei / (ea * radius**2)
    scale = p_load * radius**3 / ei
    u_xa = -scale * ((math.pi**2 - 8) / (8 * math.pi) + (math.pi / 8) * t_over_r_sq)
    u_yb = -scale * ((4 - math.pi) / (4 * math.pi) - 0.25 * t_over_r_sq)

    def angle_map(xi: float) -> float:
        pt = evaluate_geometry(curve, xi)[0]
        return math.atan2(pt[0], -pt[1])

    def exact_n(phi: float) -> float:
        return -(p_load / 2) * math.cos(phi)

    def exact_m(phi: float) -> float:
        return (p_load * radius / 2) * (2 / math.pi - math.cos(phi))

    return BenchmarkProblem(
        name="ring",
        curve=curve,
        section=section,
        loads=loads,
        constraints=constraints,
        angle_map=angle_map,
        angle_domain=(0.0, math.pi / 2),
        slenderness=ea,
        exact_n=exact_n,
        exact_m=exact_m,
        point_checks=[
            PointCheck("uxA", 0.0, (1.0, 0.0), u_xa),
            PointCheck("uyB", 1.0, (0.0, 1.0), u_yb),
        ],
    )


def _arch_exact(t: float):
    """Closed-form semicircular-arch solution callbacks and parameters."""
    radius, young, width = 10.0, 2.1e11, 0.1
    q = 1e6 * t**3
    ea = young * t * width
    ei = young * t**3 * width / 12.0
    c1 = 0.5 * (radius / ea + radius**3 / ei)
    c2 = radius**3 / ei
    c3 = radius**2 / ei
    a1 = ((8 * math.pi * q * (c1 - c2) + 3 * math.pi * q * radius * c3)
          / (6 * math.pi**2 * (c1 / radius) - 24 * c3))
    a2 = (q * radius**2 / 2
          - (16 * math.pi * q * radius * (c1 - c2) + 6 * math.pi * q * radius**2 * c3)
          / (6 * math.pi**3 * (c1 / radius) - 24 * math.pi * c3))
    a3 = -2 * q * radius * (c1 - c2) / 3 - 3 * q * radius**2 * c3 / 4

    def u_tangential(phi: float) -> float:
        return (a1 * (c1 * phi * np.sin(phi) - c3 * radius * (1 - np.cos(phi)))
                - a2 * c3 * (phi - np.sin(phi)) + a3 * np.sin(phi)
                - q * radius * (np.sin(2 * phi) * (2 / 3 * c1 - c2 / 6 - c3 * radius / 8)
                                - phi * c3 * radius / 2))

    def u_normal(phi: float) -> float:
        return (a1 * (c1 * (phi * np.cos(phi) - np.sin(phi))
                      + c2 * np.sin(phi) - c3 * radius * np.sin(phi))
                - a2 * c3 * (1 - np.cos(phi)) + a3 * np.cos(phi)
                + q * radius * (c1 - c2 / 2 + c3 * radius / 2
                                - np.cos(2 * phi) * (c1 / 3 + c2 / 6 - c3 * radius / 4)))

    def exact_u(phi: float) -> np.ndarray:
        ut, un = u_tangential(phi), u_normal(phi)
        return np.array([ut * np.sin(phi) + un * np.cos(phi),
                         ut * np.cos(phi) - un * np.sin(phi)])

    def exact_n(phi: float) -> float:
        return a1 * np.sin(phi) - q * radius * np.cos(phi)**2

    def exact_m(phi: float) -> float:
        return a1 * radius * np.sin(phi) + a2 - q * radius**2 / 2 * (1 + 0.5 * np.cos(2 * phi))

    params = dict(radius=radius, q=q, ea=ea, ei=ei, c1=c1, c2=c2, c3=c3,
                  a1=a1, a2=a2, a3=a3)
    return u_tangential, u_normal, exact_u, exact_n, exact_m, params


def build_arch_half(n_elements: int, t: float) -> BenchmarkProblem:
    """Clamped-clamped semicircular arch under q per unit horizontal length,
    half model: clamped base at (-R, 0), symmetry at the crown (0, R)."""
    if t <= 0.0:
        raise ValueError(f"thickness must be positive, got {t}")
    _, _, exact_u, exact_n, exact_m, params = _arch_exact(t)
    radius, q = params["radius"], params["q"]
    base = NurbsCurve(
        KnotVector(2, [0, 0, 0, 1, 1, 1]),
        [[-radius, 0.0], [-radius, radius], [0.0, radius]],
        [1.0, _CONIC_WEIGHT, 1.0],
    )
    curve = _refine_to(base, n_elements)
    section = CrossSection(ea=params["ea"], ei=params["ei"])

    def distributed(s: float) -> np.ndarray:
        phi = s / radius
        return np.array([0.0, -q * math.sin(phi)])

    loads = LoadSpec(distributed=distributed)
    constraints = (clamped_end_constraints(curve, "start")
                   + symmetry_end_constraints(curve, "end"))

    def angle_map(xi: float) -> float:
        pt = evaluate_geometry(curve, xi)[0]
        return math.atan2(pt[1], -pt[0])

    crown_uy = float(exact_u(math.pi / 2)[1])
    return BenchmarkProblem(
        name="arch",
        curve=curve,
        section=section,
        loads=loads,
        constraints=constraints,
        angle_map=angle_map,
        angle_domain=(0.0, math.pi / 2),
        slenderness=t,
        exact_u=exact_u,
        exact_n=exact_n,
        exact_m=exact_m,
        point_checks=[PointCheck("uyC", 1.0, (0.0, 1.0), crown_uy)],
    )


def build_ellipse_quarter(n_elements: int, t: float,
                          with_reference_checks: bool = False) -> BenchmarkProblem:
    """Clamped quarter elliptical arch (a=2, b=1) with a vertical point load
    P = 1e7 t^3 at the free end (0, b).

    Passing with_reference_checks=True attaches free-end point checks against
    the fine-mesh reference solve (computed once per thickness and cached).
    """
    if t <= 0.0:
        raise ValueError(f"thickness must be positive, got {t}")
    a_ax, b_ax, young, width = 2.0, 1.0, 7.0e10, 0.1
    p_load = 1e7 * t**3
    base = NurbsCurve(
        KnotVector(2, [0, 0, 0, 1, 1, 1]),
        [[-a_ax, 0.0], [-a_ax, b_ax], [0.0, b_ax]],
        [1.0, _CONIC_WEIGHT, 1.0],
    )
    curve = _refine_to(base, n_elements)
    section = CrossSection.rectangular(young, t, width)
    loads = LoadSpec(point_loads=[("end", np.array([0.0, -p_load]))])
    constraints = clamped_end_constraints(curve, "start")

    def angle_map(xi: float) -> float:
        pt = evaluate_geometry(curve, xi)[0]
        return math.atan2(pt[1] / b_ax, -pt[0] / a_ax)

    point_checks = []
    if with_reference_checks:
        ref = ellipse_reference(t)
        point_checks = [
            PointCheck("ux_free", 1.0, (1.0, 0.0), ref["ux_free"]),
            PointCheck("uy_free", 1.0, (0.0, 1.0), ref["uy_free"]),
        ]
    return BenchmarkProblem(
        name="ellipse",
        curve=curve,
        section=section,
        loads=loads,
        constraints=constraints,
        angle_map=angle_map,
        angle_domain=(0.0, math.pi / 2),
        slenderness=t,
        point_checks=point_checks,
    )


@functools.lru_cache(maxsize=None)
def ellipse_reference(t: float) -> dict:
    """Reference values for the elliptical arch at thickness t.

    Free-end displacements come from CAS solves on 512 and 1024 elements with
    Richardson extrapolation (rate 2); `richardson_rel_diff` records the
    mesh-to-mesh agreement and `converged` whether it met 1e-4. Clamped-end
    resultant magnitudes follow from static equilibrium of the whole arch:
    |N| = P (the tangent at the clamp is vertical, like the load) and
    |M| = P*a (horizontal lever arm between the ends).
    """
    p_load, a_ax = 1e7 * t**3, 2.0

    def free_end(n_el: int) -> np.ndarray:
        problem = build_ellipse_quarter(n_el, t)
        sol = solve_problem(problem, ElementFormulation.CAS)
        return sol.u[-1].copy()

    coarse = free_end(512)
    fine = free_end(1024)
    rel = float(np.max(np.abs(fine - coarse) / np.abs(fine)))
    extrapolated = fine + (fine - coarse) / 3.0
    return {
        "ux_free": float(extrapolated[0]),
        "uy_free": float(extrapolated[1]),
        "n_clamp_abs": p_load,
        "m_clamp_abs": p_load * a_ax,
        "richardson_rel_diff": rel,
        "converged": rel < 1e-4,
    }


def exact_fields(problem: BenchmarkProblem, phi: float) -> dict:
    """Exact field values at angle phi; raises when the problem has none."""
    lo, hi = problem.angle_domain
    if not lo - 1e-12 <= phi <= hi + 1e-12:
        raise OutOfDomainError(f"phi={phi} outside [{lo}, {hi}]")
    if not problem.has_exact_fields:
        raise MissingExactFieldError(
            f"problem {problem.name!r} has reference point values only")
    out = {}
    if problem.exact_u is not None:
        out["u"] = problem.exact_u(phi)
    if problem.exact_n is not None:
        out["N"] = problem.exact_n(phi)
    if problem.exact_m is not None:
        out["M"] = problem.exact_m(phi)
    return out


def solve_problem(problem: BenchmarkProblem, formulation: ElementFormulation,
                  quad_points: int | None = None) -> RodSolution:
    """Assemble, constrain, and solve one benchmark with one formulation."""
    ops = PatchOperators(problem.curve, problem.section, formulation, quad_points)
    system = assemble(problem.curve, problem.section, formulation, problem.loads,
                      ops=ops)
    constrained = apply_constraints(system, problem.constraints)
    displacements = solve(constrained)
    return RodSolution(
        curve=problem.curve,
        section=problem.section,
        formulation=formulation,
        quad_points=ops.n_quad,
        displacements=displacements,
        ops=ops,
        n_dof=constrained.n_dof,
    )
