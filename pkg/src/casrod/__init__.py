"""NURBS-based Galerkin analysis of linear plane curved Kirchhoff rods.

Quadratic NURBS discretizations of curved Kirchhoff rods lock in membrane-
dominated regimes; this package implements continuous-assumed-strain (CAS)
elements alongside five comparison formulations (full/reduced integration,
local and global B-bar, local ANS), plus benchmark problems with exact
solutions and a convergence-study CLI.
"""

from .assembly import (
    ConstrainedSystem,
    FixedDof,
    GlobalSystem,
    LoadSpec,
    QuadratureRule,
    RodSolution,
    TieDof,
    apply_constraints,
    assemble,
    clamped_end_constraints,
    gauss_rule,
    solve,
    symmetry_end_constraints,
)
from .benchmarks import (
    BenchmarkProblem,
    SlendernessCase,
    build_arch_half,
    build_ellipse_quarter,
    build_ring_quarter,
    ellipse_reference,
    exact_fields,
    solve_problem,
    standard_slenderness_cases,
)
from .formulations import (
    ElementFormulation,
    ElementMatrices,
    PatchOperators,
    bending_moment_field,
    element_stiffness_cas,
    element_stiffness_local_ans,
    element_stiffness_local_bbar,
    element_stiffness_standard,
    membrane_force_field,
    patch_stiffness_global_bbar,
)
from .metrics import (
    ConvergenceRecord,
    ErrorReport,
    convergence_rate,
    displacement_at,
    l2_errors,
    sample_fields,
)
from .rod import (
    ControlDisplacements,
    CrossSection,
    GeometryFrame,
    bending_strain,
    frame_at,
    membrane_strain,
    stress_resultants,
)
from .splines import (
    BasisEval,
    KnotVector,
    NurbsCurve,
    bspline_basis,
    evaluate_geometry,
    greville_abscissae,
    insert_knot,
    make_open_uniform_knot_vector,
    nurbs_basis,
    refine_uniform,
)

__version__ = "0.1.0"
