"""Relative L2 error norms, point-value extraction, field sampling, rates.

The displacement, membrane-force, and bending-moment errors are relative L2
norms over the model domain; the membrane force of a solution is recovered
through its formulation's own strain representation (assumed strain for the
locking treatments, compatible strain for plain NURBS).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import RodSolution
from .benchmarks import BenchmarkProblem
from .errors import InsufficientDataError, MissingExactFieldError
from .rod import frames_at
from .splines import arc_lengths_at, nurbs_basis, nurbs_basis_many

__all__ = [
    "ErrorReport",
    "ConvergenceRecord",
    "l2_errors",
    "point_errors",
    "sample_fields",
    "convergence_rate",
    "displacement_at",
    "FIELD_COLUMNS",
]

FIELD_COLUMNS = ("s", "phi", "u_x", "u_y", "N", "M", "N_exact", "M_exact")

_KNOT_OFFSET = 1e-9


@dataclass
class ErrorReport:
    """Relative L2 errors (None where no exact field exists) and point errors."""

    e_u: float | None
    e_n: float | None
    e_m: float | None
    point_errors: dict[str, float]


@dataclass
class ConvergenceRecord:
    """One mesh of a convergence study."""

    n_elements: int
    n_dof: int
    slenderness: float
    report: ErrorReport


def displacement_at(solution: RodSolution, xi: float) -> np.ndarray:
    """Displacement vector u^h(xi) of a solved discretization."""
    be = nurbs_basis(solution.curve, xi, max_deriv=0)
    rows = solution.u[be.first_active:be.first_active + solution.curve.degree + 1]
    return be.values @ rows


def _displacements_at(solution: RodSolution, xis: np.ndarray) -> np.ndarray:
    bb = nurbs_basis_many(solution.curve, xis, max_deriv=0)
    p = solution.curve.degree
    rows = solution.u[bb.first_active[:, None] + np.arange(p + 1)]
    return np.einsum("mj,mjc->mc", bb.values, rows)


def point_errors(problem: BenchmarkProblem, solution: RodSolution) -> dict[str, float]:
    """Relative displacement errors at the problem's reference points."""
    out = {}
    for check in problem.point_checks:
        value = float(displacement_at(solution, check.xi) @ np.asarray(check.direction))
        out[check.label] = abs(value - check.value) / abs(check.value)
    return out


def l2_errors(problem: BenchmarkProblem, solution: RodSolution,
              quad_pts_per_element: int = 10) -> ErrorReport:
    """Relative L2 errors of u, N, and M against the problem's exact fields.

    Uses a dedicated error-integration rule (default 10 points per element,
    saturation-verified); raises MissingExactFieldError when the problem has
    no exact fields at all.
    """
    if not problem.has_exact_fields:
        raise MissingExactFieldError(
            f"problem {problem.name!r} defines no exact fields")
    curve = solution.curve
    pts, wts = np.polynomial.legendre.leggauss(quad_pts_per_element)
    bp = np.asarray(curve.knot_vector.breakpoints, dtype=float)
    halves = 0.5 * (bp[1:] - bp[:-1])
    mids = 0.5 * (bp[1:] + bp[:-1])
    xis = (mids[:, None] + halves[:, None] * pts).reshape(-1)
    jac = frames_at(curve, xis).jac.reshape(curve.n_elements, -1)
    wds = (jac * halves[:, None] * wts).reshape(-1)
    phis = np.array([problem.angle_map(float(x)) for x in xis])

    e_u = e_n = e_m = None
    if problem.exact_u is not None:
        u_h = _displacements_at(solution, xis)
        u_ex = np.array([problem.exact_u(p) for p in phis])
        num_u = float(np.sum(wds * np.sum((u_h - u_ex) ** 2, axis=1)))
        den_u = float(np.sum(wds * np.sum(u_ex**2, axis=1)))
        e_u = np.sqrt(num_u / den_u)
    if problem.exact_n is not None:
        n_h = solution.ops.membrane_force_profile(solution.u, xis)
        n_ex = np.array([problem.exact_n(p) for p in phis])
        num_n = float(np.sum(wds * (n_h - n_ex) ** 2))
        den_n = float(np.sum(wds * n_ex**2))
        e_n = np.sqrt(num_n / den_n)
    if problem.exact_m is not None:
        m_h = solution.ops.bending_moment_profile(solution.u, xis)
        m_ex = np.array([problem.exact_m(p) for p in phis])
        num_m = float(np.sum(wds * (m_h - m_ex) ** 2))
        den_m = float(np.sum(wds * m_ex**2))
        e_m = np.sqrt(num_m / den_m)
    return ErrorReport(e_u=e_u, e_n=e_n, e_m=e_m,
                       point_errors=point_errors(problem, solution))


def _nudge_off_knots(xis: np.ndarray, breakpoints: np.ndarray) -> np.ndarray:
    """Shift samples sitting on a knot into the element interior.

    The bending moment (and the local assumed strains) are discontinuous
    across knots, so sampling exactly on one is ambiguous.
    """
    out = xis.copy()
    for i, xi in enumerate(out):
        j = np.argmin(np.abs(breakpoints - xi))
        if abs(breakpoints[j] - xi) < _KNOT_OFFSET:
            bp = breakpoints[j]
            out[i] = bp - _KNOT_OFFSET if bp >= 1.0 else bp + _KNOT_OFFSET
    return out


def sample_fields(problem: BenchmarkProblem, solution: RodSolution,
                  n_samples: int) -> np.ndarray:
    """Uniform-in-xi field samples: columns are FIELD_COLUMNS.

    Exact columns hold NaN where the problem has no exact field.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    curve = solution.curve
    xis = _nudge_off_knots(np.linspace(0.0, 1.0, n_samples),
                           np.asarray(curve.knot_vector.breakpoints))
    s = arc_lengths_at(curve, xis)
    n_h = solution.ops.membrane_force_profile(solution.u, xis)
    m_h = solution.ops.bending_moment_profile(solution.u, xis)
    u_h = _displacements_at(solution, xis)
    rows = np.empty((n_samples, len(FIELD_COLUMNS)))
    for i, xi in enumerate(xis):
        phi = problem.angle_map(float(xi))
        n_ex = problem.exact_n(phi) if problem.exact_n is not None else np.nan
        m_ex = problem.exact_m(phi) if problem.exact_m is not None else np.nan
        rows[i] = (s[i], phi, u_h[i, 0], u_h[i, 1], n_h[i], m_h[i], n_ex, m_ex)
    return rows


def convergence_rate(points: list[tuple[int, float]]) -> float:
    """Observed rate from the last 3 (n_elements, error) pairs.

    Least-squares slope of log(error) against log(n_elements), sign flipped
    so that a positive rate means the error decreases under refinement.
    """
    usable = [(n, e) for n, e in points if e > 0.0]
    if len(usable) < 3:
        raise InsufficientDataError(
            f"need at least 3 records with positive errors, got {len(usable)}")
    tail = usable[-3:]
    log_n = np.log([n for n, _ in tail])
    log_e = np.log([e for _, e in tail])
    slope = np.polyfit(log_n, log_e, 1)[0]
    return float(-slope)
