"""Projective fitting of rank-quartic components and the splitting checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .conic_geometry import _normalize_inf
from .errors import FitError, SingularPointError

LINE_TOL = 1e-6
CONIC_TOL = 1e-8


def normalize(points) -> np.ndarray:
    """Unit-norm representatives with the first significant coordinate positive."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = np.linalg.norm(P, axis=1, keepdims=True)
    if np.any(n == 0):
        raise SingularPointError("zero vector is not a projective point")
    P = P / n
    idx = np.argmax(np.abs(P) > 1e-12, axis=1)
    sign = np.sign(P[np.arange(len(P)), idx])
    return P * sign[:, None]


def conic_lift(P) -> np.ndarray:
    """Monomials (X², XY, Y², XZ, YZ, Z²) of each point."""
    X, Y, Z = P.T
    return np.column_stack([X * X, X * Y, Y * Y, X * Z, Y * Z, Z * Z])


def conic_matrix(coef) -> np.ndarray:
    a, b, c, d, e, f = coef
    return np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]])


@dataclass(frozen=True)
class FittedComponent:
    kind: str                      # "line" or "conic"
    coefficients: np.ndarray       # unit norm
    residual: float                # max |algebraic value| over the unit-norm points
    determinant: float = math.nan  # conics: det of the symmetric matrix (unit coefficients)
    smooth: bool = True

    def value(self, points) -> np.ndarray:
        P = normalize(points)
        if self.kind == "line":
            return P @ self.coefficients
        return conic_lift(P) @ self.coefficients


def fit_component(points, kind: str) -> FittedComponent:
    """Homogeneous least-squares fit: smallest right-singular vector of the lift.

    Raises :class:`FitError` for too few points or when the fit is not unique
    (points all equal for a line; points on a line for a conic).
    """
    P = normalize(points)
    if kind == "line":
        need, M = 3, P
    elif kind == "conic":
        need, M = 6, conic_lift(P)
    else:
        raise FitError(f"unknown component kind {kind!r}")
    if len(P) < need:
        raise FitError(f"{kind} fit needs at least {need} points, got {len(P)}")
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    if s[-2] <= 1e-9 * s[0]:
        raise FitError(f"points do not determine a unique {kind}")
    coef = vt[-1]
    coef = coef * np.sign(coef[np.argmax(np.abs(coef) > 1e-12)])
    res = float(np.max(np.abs(M @ coef)))
    if kind == "line":
        return FittedComponent("line", coef, res)
    det = float(np.linalg.det(conic_matrix(coef)))
    return FittedComponent("conic", coef, res, det, abs(det) > 1e-6)


def line_intersection(l1, l2) -> np.ndarray:
    """Projective intersection point of two lines."""
    X = np.cross(l1, l2)
    if np.linalg.norm(X) <= 1e-14 * np.linalg.norm(l1) * np.linalg.norm(l2):
        raise SingularPointError("coincident lines")
    return normalize(X)[0]


def concurrency_metric(lines) -> float:
    """Smallest over largest singular value of the stacked line coefficients."""
    s = np.linalg.svd(normalize(lines), compute_uv=False)
    return float(s[-1] / s[0])


def general_position_metric(lines) -> float:
    """Minimum of :func:`concurrency_metric` over all triples (0 if three concur)."""
    L = normalize(lines)
    return min(concurrency_metric(L[list(t)]) for t in itertools.combinations(range(len(L)), 3))


def _homog_slope(m):
    m = float(_normalize_inf(m))
    return (0.0, 1.0) if math.isinf(m) else (1.0, m)


def _cr(v):
    def br(i, j):
        return v[i][0] * v[j][1] - v[j][0] * v[i][1]

    num = br(0, 2) * br(1, 3)
    den = br(0, 3) * br(1, 2)
    if den == 0 or num == 0:
        raise SingularPointError("cross ratio needs four distinct elements")
    return num / den


def cross_ratio(m1, m2, m3, m4) -> float:
    """((m1−m3)(m2−m4))/((m1−m4)(m2−m3)) for extended-real slopes.

    Slopes are treated as homogeneous pairs (1, m), with (0, 1) for ∞, so
    infinite slopes need no limits.  Harmonic quadruples give −1.
    """
    return _cr([_homog_slope(m) for m in (m1, m2, m3, m4)])


def harmonic_conjugate(m1, m2, m3):
    """Slope m4 with cross_ratio(m1, m2, m3, m4) = −1."""
    v1, v2, v3 = (np.array(_homog_slope(m)) for m in (m1, m2, m3))
    try:
        a, b = np.linalg.solve(np.column_stack([v1, v2]), v3)
    except np.linalg.LinAlgError:
        raise SingularPointError("m1 and m2 coincide") from None
    if a == 0 or b == 0:
        raise SingularPointError("m3 coincides with m1 or m2")
    vx, vy = a * v1 - b * v2
    return math.inf if abs(vx) <= 1e-15 * abs(vy) else float(vy / vx)


def pencil_cross_ratio(lines) -> float:
    """Cross ratio of four concurrent lines, in a basis of their pencil."""
    L = normalize(lines)
    if len(L) != 4:
        raise SingularPointError("need four lines")
    _, _, vt = np.linalg.svd(L)
    coords = L @ vt[:2].T
    return _cr([tuple(c) for c in coords])


@dataclass
class QuarticReport:
    components: list
    pattern: str
    incidences: dict = field(default_factory=dict)


def classify(arcs, line_tol: float = LINE_TOL, conic_tol: float = CONIC_TOL,
             incidence_tol: float = 1e-5, concurrency_tol: float = 1e-6,
             general_tol: float = 1e-3, harmonic_tol: float = 1e-4) -> QuarticReport:
    """Fit the four arcs and evaluate the splitting pattern.

    Each arc is fitted as a line; arcs with line residual above ``line_tol``
    are refitted as conics.  Patterns:

    * ``"conic+2lines"``: two lines whose intersection lies on a common
      smooth conic through both curved arcs;
    * ``"4lines-concurrent"``: four lines through one point (the cross ratio
      of the pencil is reported and checked for −1);
    * ``"4lines-general"``: four lines, no three concurrent.
    """
    if len(arcs) != 4:
        raise FitError(f"expected 4 arcs, got {len(arcs)}")
    comps = []
    for arc in arcs:
        c = fit_component(arc, "line")
        if c.residual > line_tol:
            c = fit_component(arc, "conic")
            if c.residual > conic_tol or not c.smooth:
                raise FitError("arc fits neither a line nor a smooth conic")
        comps.append(c)
    inc = {}
    lines = [c for c in comps if c.kind == "line"]
    curved = [i for i, c in enumerate(comps) if c.kind == "conic"]
    if len(lines) == 4:
        L = np.array([c.coefficients for c in lines])
        conc = concurrency_metric(L)
        gen = general_position_metric(L)
        inc["concurrency_metric"] = conc
        inc["general_position_metric"] = gen
        if conc < concurrency_tol:
            cr = pencil_cross_ratio(L)
            inc["cross_ratio"] = cr
            # the pairing of arcs (1,2 | 3,4) fixes the cross-ratio convention
            inc["harmonic"] = bool(abs(cr + 1) <= harmonic_tol)
            pattern = "4lines-concurrent"
        elif gen > general_tol:
            pattern = "4lines-general"
        else:
            pattern = "4lines-degenerate"
    elif len(lines) == 2 and len(curved) == 2:
        common = fit_component(np.vstack([arcs[i] for i in curved]), "conic")
        V = line_intersection(lines[0].coefficients, lines[1].coefficients)
        on = float(abs(conic_lift(V[None, :]) @ common.coefficients)[0])
        inc["common_conic_residual"] = common.residual
        inc["common_conic_smooth"] = common.smooth
        inc["line_intersection_on_conic"] = on
        ok = common.residual <= conic_tol and common.smooth and on <= incidence_tol
        pattern = "conic+2lines" if ok else "other"
    else:
        pattern = "other"
    return QuarticReport(comps, pattern, inc)
