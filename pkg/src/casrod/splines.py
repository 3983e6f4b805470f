"""B-spline/NURBS basis evaluation, open knot vectors, knot insertion, curve geometry.

The parametric domain is fixed to [0, 1]. Knot vectors are open with no repeated
interior knots, so the basis has maximal C^(p-1) continuity and every nonzero
knot span acts as one element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomainError

__all__ = [
    "KnotVector",
    "NurbsCurve",
    "BasisEval",
    "BasisBatch",
    "make_open_uniform_knot_vector",
    "bspline_basis",
    "bspline_basis_many",
    "nurbs_basis",
    "nurbs_basis_many",
    "evaluate_geometry",
    "refine_uniform",
    "insert_knot",
    "greville_abscissae",
    "element_arc_lengths",
    "arc_length_at",
    "arc_lengths_at",
]


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector on [0, 1] with unrepeated interior knots.

    Attributes:
        degree: polynomial degree p >= 1.
        knots: non-decreasing knot values; first and last repeated exactly
            p+1 times, interior knots strictly increasing.
    """

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "knots", np.asarray(self.knots, dtype=float))
        p, t = self.degree, self.knots
        if p < 1:
            raise ValueError(f"degree must be >= 1, got {p}")
        if t.ndim != 1 or len(t) < 2 * (p + 1):
            raise ValueError("knot vector must have at least 2(p+1) entries")
        if np.any(np.diff(t) < 0.0):
            raise ValueError("knots must be non-decreasing")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValueError("parametric domain must be [0, 1]")
        if not (np.all(t[: p + 1] == 0.0) and np.all(t[-(p + 1):] == 1.0)):
            raise ValueError("knot vector must be open (ends repeated p+1 times)")
        interior = t[p:len(t) - p]
        if np.any(np.diff(interior) <= 0.0):
            raise ValueError("interior knots must be strictly increasing (no repeats)")
        self.knots.setflags(write=False)

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def breakpoints(self) -> np.ndarray:
        """Element boundaries: the distinct knot values, ends included."""
        return self.knots[self.degree:len(self.knots) - self.degree]

    @property
    def n_elements(self) -> int:
        return len(self.breakpoints) - 1

    def find_span(self, xi: float) -> int:
        """Index k of the nonzero span [knots[k], knots[k+1]) containing xi.

        xi = 1 is treated as belonging to the last nonzero span.
        """
        if not 0.0 <= xi <= 1.0:
            raise OutOfDomainError(f"xi={xi} outside parametric domain [0, 1]")
        k = int(np.searchsorted(self.knots, xi, side="right")) - 1
        return min(max(k, self.degree), len(self.knots) - self.degree - 2)

    def element_span(self, element: int) -> tuple[float, float]:
        """Parametric interval of the given element (0-based)."""
        bp = self.breakpoints
        return float(bp[element]), float(bp[element + 1])


@dataclass(frozen=True)
class NurbsCurve:
    """Plane NURBS curve: knot vector, 2D control points, positive weights."""

    knot_vector: KnotVector
    control_points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.control_points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        n = self.knot_vector.n_basis
        if q.shape != (n, 2):
            raise ValueError(f"expected {n} control points of dimension 2, got {q.shape}")
        if w.shape != (n,):
            raise ValueError(f"expected {n} weights, got {w.shape}")
        if np.any(w <= 0.0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "control_points", q)
        object.__setattr__(self, "weights", w)
        q.setflags(write=False)
        w.setflags(write=False)

    @property
    def degree(self) -> int:
        return self.knot_vector.degree

    @property
    def n_basis(self) -> int:
        return self.knot_vector.n_basis

    @property
    def n_elements(self) -> int:
        return self.knot_vector.n_elements


@dataclass
class BasisEval:
    """Nonzero basis functions at one parametric point.

    values/d1/d2 hold the p+1 functions with indices
    first_active .. first_active+p; derivatives are parametric (d/dxi).
    """

    first_active: int
    values: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None

    @property
    def active(self) -> np.ndarray:
        return np.arange(self.first_active, self.first_active + len(self.values))


def make_open_uniform_knot_vector(degree: int, n_elements: int) -> KnotVector:
    """Open knot vector with n_elements equal nonzero spans on [0, 1]."""
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if n_elements < 1:
        raise ValueError(f"n_elements must be >= 1, got {n_elements}")
    interior = np.linspace(0.0, 1.0, n_elements + 1)
    knots = np.concatenate([np.zeros(degree), interior, np.ones(degree)])
    return KnotVector(degree, knots)


def _value_triangle(t: np.ndarray, p: int, k: int, xi: float) -> list[list[float]]:
    """Values of the active basis functions for all degrees 0..p on span k.

    tri[d][j] is the value of function (k-d+j) of degree d at xi. The 0/0
    convention of the recursion is realized by skipping zero-width terms.
    """
    tri = [[1.0]]
    for d in range(1, p + 1):
        prev = tri[d - 1]
        cur = [0.0] * (d + 1)
        for j in range(d + 1):
            i = k - d + j
            acc = 0.0
            if j >= 1:
                den = t[i + d] - t[i]
                if den > 0.0:
                    acc += (xi - t[i]) / den * prev[j - 1]
            if j <= d - 1:
                den = t[i + d + 1] - t[i + 1]
                if den > 0.0:
                    acc += (t[i + d + 1] - xi) / den * prev[j]
            cur[j] = acc
        tri.append(cur)
    return tri


def _derivative_step(lower: list[float], d: int, k: int, t: np.ndarray) -> list[float]:
    """One differentiation of the degree-d functions on span k.

    `lower` holds the (already differentiated as needed) degree-(d-1)
    functions on the same span; the output aligns with the d+1 active
    degree-d functions.
    """
    out = [0.0] * (d + 1)
    for j in range(d + 1):
        i = k - d + j
        acc = 0.0
        if j >= 1:
            den = t[i + d] - t[i]
            if den > 0.0:
                acc += lower[j - 1] / den
        if j <= d - 1:
            den = t[i + d + 1] - t[i + 1]
            if den > 0.0:
                acc -= lower[j] / den
        out[j] = d * acc
    return out


def bspline_basis(kv: KnotVector, xi: float, max_deriv: int = 2) -> BasisEval:
    """Nonzero B-spline basis values and parametric derivatives at xi.

    Derivatives use the standard degree-reduction formula rather than
    differentiating the recursion, for numerical stability.
    """
    if not 0.0 <= xi <= 1.0:
        raise OutOfDomainError(f"xi={xi} outside parametric domain [0, 1]")
    p, t = kv.degree, kv.knots
    k = kv.find_span(xi)
    tri = _value_triangle(t, p, k, xi)
    values = np.array(tri[p])
    d1 = None
    d2 = None
    if max_deriv >= 1:
        d1 = np.array(_derivative_step(tri[p - 1], p, k, t))
    if max_deriv >= 2:
        if p >= 2:
            dlow = _derivative_step(tri[p - 2], p - 1, k, t)
            d2 = np.array(_derivative_step(dlow, p, k, t))
        else:
            d2 = np.zeros(p + 1)
    return BasisEval(k - p, values, d1, d2)


@dataclass
class BasisBatch:
    """Vectorized counterpart of BasisEval: row i holds the data at xis[i]."""

    first_active: np.ndarray          # (m,) int
    values: np.ndarray                # (m, p+1)
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None


def _find_spans(kv: KnotVector, xis: np.ndarray) -> np.ndarray:
    if np.any(xis < 0.0) or np.any(xis > 1.0):
        raise OutOfDomainError("xi values outside parametric domain [0, 1]")
    k = np.searchsorted(kv.knots, xis, side="right") - 1
    return np.clip(k, kv.degree, len(kv.knots) - kv.degree - 2).astype(int)


def _masked_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num/den with the 0/0 convention: zero wherever the span width is zero."""
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0.0)
    return out


def _value_triangle_many(t: np.ndarray, p: int, k: np.ndarray,
                         xis: np.ndarray) -> list[np.ndarray]:
    tri = [np.ones((len(xis), 1))]
    for d in range(1, p + 1):
        prev = tri[d - 1]
        cur = np.zeros((len(xis), d + 1))
        for j in range(d + 1):
            i = k - d + j
            acc = np.zeros(len(xis))
            if j >= 1:
                acc += _masked_ratio(xis - t[i], t[i + d] - t[i]) * prev[:, j - 1]
            if j <= d - 1:
                acc += _masked_ratio(t[i + d + 1] - xis, t[i + d + 1] - t[i + 1]) * prev[:, j]
            cur[:, j] = acc
        tri.append(cur)
    return tri


def _derivative_step_many(lower: np.ndarray, d: int, k: np.ndarray,
                          t: np.ndarray) -> np.ndarray:
    out = np.zeros((lower.shape[0], d + 1))
    for j in range(d + 1):
        i = k - d + j
        acc = np.zeros(lower.shape[0])
        if j >= 1:
            acc += _masked_ratio(lower[:, j - 1], t[i + d] - t[i])
        if j <= d - 1:
            acc -= _masked_ratio(lower[:, j], t[i + d + 1] - t[i + 1])
        out[:, j] = d * acc
    return out


def bspline_basis_many(kv: KnotVector, xis, max_deriv: int = 2) -> BasisBatch:
    """Vectorized bspline_basis over an array of parametric points."""
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    p, t = kv.degree, kv.knots
    k = _find_spans(kv, xis)
    tri = _value_triangle_many(t, p, k, xis)
    d1 = d2 = None
    if max_deriv >= 1:
        d1 = _derivative_step_many(tri[p - 1], p, k, t)
    if max_deriv >= 2:
        if p >= 2:
            dlow = _derivative_step_many(tri[p - 2], p - 1, k, t)
            d2 = _derivative_step_many(dlow, p, k, t)
        else:
            d2 = np.zeros((len(xis), p + 1))
    return BasisBatch(k - p, tri[p], d1, d2)


def nurbs_basis_many(curve: NurbsCurve, xis, max_deriv: int = 2) -> BasisBatch:
    """Vectorized nurbs_basis over an array of parametric points."""
    bb = bspline_basis_many(curve.knot_vector, xis, max_deriv)
    p = curve.degree
    w = curve.weights[bb.first_active[:, None] + np.arange(p + 1)]
    a = w * bb.values
    wsum = a.sum(axis=1, keepdims=True)
    r = a / wsum
    r1 = r2 = None
    if max_deriv >= 1:
        a1 = w * bb.d1
        w1 = a1.sum(axis=1, keepdims=True)
        r1 = (a1 - r * w1) / wsum
        if max_deriv >= 2:
            a2 = w * bb.d2
            w2 = a2.sum(axis=1, keepdims=True)
            r2 = (a2 - 2.0 * r1 * w1 - r * w2) / wsum
    return BasisBatch(bb.first_active, r, r1, r2)


def nurbs_basis(curve: NurbsCurve, xi: float, max_deriv: int = 2) -> BasisEval:
    """Rational basis values and parametric derivatives at xi.

    Quotient rule applied to the weighted B-spline sum; partition of unity
    holds for the values and the derivative rows sum to zero.
    """
    be = bspline_basis(curve.knot_vector, xi, max_deriv)
    sl = slice(be.first_active, be.first_active + curve.degree + 1)
    w = curve.weights[sl]
    a = w * be.values
    wsum = a.sum()
    r = a / wsum
    r1 = None
    r2 = None
    if max_deriv >= 1:
        a1 = w * be.d1
        w1 = a1.sum()
        r1 = (a1 - r * w1) / wsum
        if max_deriv >= 2:
            a2 = w * be.d2
            w2 = a2.sum()
            r2 = (a2 - 2.0 * r1 * w1 - r * w2) / wsum
    return BasisEval(be.first_active, r, r1, r2)


def evaluate_geometry(curve: NurbsCurve, xi: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Point r(xi) and parametric derivatives dr/dxi, d2r/dxi2 of the curve."""
    be = nurbs_basis(curve, xi, max_deriv=2)
    q = curve.control_points[be.first_active:be.first_active + curve.degree + 1]
    return be.values @ q, be.d1 @ q, be.d2 @ q


def insert_knot(curve: NurbsCurve, u: float) -> NurbsCurve:
    """Insert a single knot at u (strictly inside a nonzero span).

    Geometry is unchanged; the control net is updated in homogeneous
    coordinates by the standard knot-insertion rule.
    """
    kv = curve.knot_vector
    p, t = kv.degree, kv.knots
    if not 0.0 < u < 1.0:
        raise ValueError(f"knot to insert must lie in (0, 1), got {u}")
    if np.any(t == u):
        raise ValueError(f"knot {u} already present (repeats are out of scope)")
    k = kv.find_span(u)
    pw = np.column_stack([
        curve.weights[:, None] * curve.control_points,
        curve.weights,
    ])
    new_pw = np.empty((len(pw) + 1, 3))
    new_pw[:k - p + 1] = pw[:k - p + 1]
    for i in range(k - p + 1, k + 1):
        alpha = (u - t[i]) / (t[i + p] - t[i])
        new_pw[i] = alpha * pw[i] + (1.0 - alpha) * pw[i - 1]
    new_pw[k + 1:] = pw[k:]
    new_t = np.insert(t, k + 1, u)
    new_w = new_pw[:, 2]
    new_q = new_pw[:, :2] / new_w[:, None]
    return NurbsCurve(KnotVector(p, new_t), new_q, new_w)


def refine_uniform(curve: NurbsCurve) -> NurbsCurve:
    """Insert the midpoint of every nonzero span once (uniform h-refinement)."""
    midpoints = 0.5 * (curve.knot_vector.breakpoints[:-1] + curve.knot_vector.breakpoints[1:])
    refined = curve
    for u in midpoints:
        refined = insert_knot(refined, float(u))
    return refined


def greville_abscissae(kv: KnotVector) -> np.ndarray:
    """Characteristic parametric abscissa of each basis function."""
    p, t = kv.degree, kv.knots
    return np.array([t[b + 1:b + p + 1].mean() for b in range(kv.n_basis)])


_GAUSS10 = np.polynomial.legendre.leggauss(10)


def _segment_lengths(curve: NurbsCurve, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Arc lengths of parametric intervals [a_i, b_i] by 10-point Gauss quadrature."""
    nodes, wts = _GAUSS10
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    pts = (mid[:, None] + half[:, None] * nodes).reshape(-1)
    bb = nurbs_basis_many(curve, pts, max_deriv=1)
    q = curve.control_points[bb.first_active[:, None] + np.arange(curve.degree + 1)]
    d1 = np.einsum("mj,mjc->mc", bb.d1, q)
    jac = np.hypot(d1[:, 0], d1[:, 1]).reshape(len(a), len(nodes))
    return half * (jac @ wts)


def element_arc_lengths(curve: NurbsCurve) -> np.ndarray:
    """Cumulative arc length at every element boundary (starts at 0)."""
    bp = np.asarray(curve.knot_vector.breakpoints, dtype=float)
    lengths = _segment_lengths(curve, bp[:-1], bp[1:])
    return np.concatenate([[0.0], np.cumsum(lengths)])


def arc_lengths_at(curve: NurbsCurve, xis,
                   boundary_lengths: np.ndarray | None = None) -> np.ndarray:
    """Arc length from xi=0 to each xi (vectorized)."""
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    kv = curve.knot_vector
    if boundary_lengths is None:
        boundary_lengths = element_arc_lengths(curve)
    e = _find_spans(kv, xis) - kv.degree
    a = np.asarray(kv.breakpoints, dtype=float)[e]
    s = boundary_lengths[e].copy()
    inside = xis > a
    if np.any(inside):
        s[inside] += _segment_lengths(curve, a[inside], xis[inside])
    return s


def arc_length_at(curve: NurbsCurve, xi: float,
                  boundary_lengths: np.ndarray | None = None) -> float:
    """Arc length from xi=0 to xi. Pass precomputed boundary lengths to amortize."""
    return float(arc_lengths_at(curve, [xi], boundary_lengths)[0])
