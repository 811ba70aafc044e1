"""Transport of the closed Frobenius systems for Abelian-relation coefficients.

For the confocal 4-webs an Abelian relation is determined by three functions
(K, L, J) obeying a linear total differential system

    F_x = A(x, y, T) F,    F_y = B(x, y, T) F,

where the rows of the 3×3 state F are the vectors K⃗, L⃗, J⃗ (one column per
solution).  Integrability makes transport along a path depend only on its
endpoints; loop defects measure that numerically.  Besides the linear
systems, two nonlinear jet systems are transported: the reduced two-line
system for (T, T_x, T_y) and the tangent-web system for (P, T, T_x, T_y, T_xy).

Coefficients use the exact confocal slope T at each point, never finite
differences.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .conic_geometry import (ConfocalFamily, ConicMember, Point,
                             confocal_second_derivatives, slope_P, slope_system,
                             tangent_slopes)
from .errors import DomainError, FlowError, FrameDegeneracyError, SingularPointError

RTOL = 1e-10
ATOL = 1e-10
MAX_COND = 1e8


class SystemKind(enum.Enum):
    CARTESIAN = "cartesian"
    BIPOLAR = "bipolar"
    REMARK2 = "two-lines-remark2"
    TANGENT = "tangent"


@dataclass(frozen=True)
class FrameState:
    """Three stacked solutions: rows K⃗, L⃗, J⃗ of ``F``, valid at ``base``."""

    F: np.ndarray
    base: Point

    @property
    def K(self):
        return self.F[0]

    @property
    def L(self):
        return self.F[1]

    @property
    def J(self):
        return self.F[2]

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.F))

    @classmethod
    def identity(cls, base) -> "FrameState":
        return cls(np.eye(3), Point(float(base[0]), float(base[1])))


@dataclass(frozen=True)
class JetState:
    """Values of a nonlinear jet system at ``base``.

    REMARK2: (T, T_x, T_y); TANGENT: (P, T, T_x, T_y, T_xy).
    """

    values: np.ndarray
    base: Point


# ---------------------------------------------------------------------------
# exact confocal slope, scalar fast path


def _slope_T(x, y, a2, b2):
    bq = x * x + y * y - a2 - b2
    cq = a2 * b2 - b2 * x * x - a2 * y * y
    sd = math.hypot(x - math.sqrt(a2 - b2), y) * math.hypot(x + math.sqrt(a2 - b2), y)
    q = -0.5 * (bq + (sd if bq >= 0 else -sd))
    lam1 = min(q, cq / q)
    return x * (b2 - lam1) / (y * (a2 - lam1))


# ---------------------------------------------------------------------------
# coefficient matrices


def cartesian_matrices(x, y, T):
    """(A, B) of the confocal + Cartesian system (rows K, L, J)."""
    D = T * T + 1
    den1 = 2 * x * y * D
    den2 = 4 * x * x * y * y * D ** 4
    dJ = 2 * x * y * D * D
    T2, T3, T4, T5 = T * T, T ** 3, T ** 4, T ** 5
    T6, T7, T8, T9 = T ** 6, T ** 7, T ** 8, T ** 9
    x2, y2, xy = x * x, y * y, x * y
    a = -T * (x * T2 + 2 * y * T - x) / den1
    b = T * (y * T2 - 2 * x * T - y) / den1
    cK = (x * T2 + 2 * y * T - x) / den1
    cL = (y * T2 - 2 * x * T - y) / den1
    P1 = x * T5 + 7 * y * T4 - 14 * x * T3 - 10 * y * T2 + x * T - y
    Q1 = y * T5 - 7 * x * T4 - 14 * y * T3 + 10 * x * T2 + y * T + x
    P2 = (x2 * T9 + 9 * xy * T8 + 14 * (y2 - x2) * T7 - 20 * xy * T6
          + (10 * y2 - 16 * x2) * T5 - 66 * xy * T4 + (30 * x2 - 38 * y2) * T3
          + 28 * xy * T2 - (x2 + 2 * y2) * T + xy)
    Q2 = (xy * T9 + (2 * y2 - 7 * x2) * T8 - 16 * xy * T7 - (2 * x2 + 10 * y2) * T6
          - 38 * xy * T5 + (36 * x2 - 42 * y2) * T4 + 40 * xy * T3
          + 2 * (x2 + y2) * T2 - 3 * xy * T + 3 * x2)
    P3 = (xy * T9 + (7 * y2 - 2 * x2) * T8 - 16 * xy * T7 + (10 * x2 + 2 * y2) * T6
          - 38 * xy * T5 + (42 * x2 - 36 * y2) * T4 + 40 * xy * T3
          - 2 * (x2 + y2) * T2 - 3 * xy * T - 3 * y2)
    # the coefficient of T⁴ is read as 66·x·y (see notes on the Q3 polynomial)
    Q3 = (y2 * T9 - 9 * xy * T8 + 14 * (x2 - y2) * T7 + 20 * xy * T6
          + (10 * x2 - 16 * y2) * T5 + 66 * xy * T4 + (30 * y2 - 38 * x2) * T3
          - 28 * xy * T2 - (2 * x2 + y2) * T - xy)
    A = np.array([[a, b, T],
                  [cK, cL, -1.0],
                  [-P2 / den2, P3 / den2, P1 / dJ]])
    B = np.array([[cK, cL, 1.0],
                  [a, b, T],
                  [Q2 / den2, -Q3 / den2, -Q1 / dJ]])
    return A, B


def bipolar_matrices(x, y, T):
    """(A, B) of the confocal + bipolar system (rows K, L, J)."""
    D = T * T + 1
    d1 = 2 * x * y * D * D
    d3 = 4 * x * x * y * y * D ** 3
    T2, T3, T4, T5, T6, T7 = T * T, T ** 3, T ** 4, T ** 5, T ** 6, T ** 7
    x2, y2, xy = x * x, y * y, x * y
    Kx = [-T * (x * T4 + 2 * y * T3 + 4 * x * T2 + 6 * y * T - x) / d1,
          T * (y * T4 - 2 * x * T3 - 4 * y * T2 + 2 * x * T - y) / d1,
          T]
    Ky = [(x * T4 + 2 * y * T3 - 4 * x * T2 - 2 * y * T - x) / d1,
          (y * T4 - 2 * x * T3 - 4 * y * T2 + 2 * x * T - y) / d1,
          1.0]
    Lx = [Ky[0], Ky[1], -1.0]
    Ly = [-T * (x * T4 + 2 * y * T3 - 4 * x * T2 - 2 * y * T - x) / d1,
          T * (y * T4 - 2 * x * T3 + 4 * y * T2 - 6 * x * T - y) / d1,
          T]
    Jx = [-(x2 * T7 + 9 * xy * T6 + (14 * y2 - 15 * x2) * T5 - 37 * xy * T4
            + (11 * x2 - 16 * y2) * T3 + 19 * xy * T2 + (2 * y2 - 5 * x2) * T + xy) / d3,
          (xy * T7 + (7 * y2 - 2 * x2) * T6 - 25 * xy * T5 + (24 * x2 - 17 * y2) * T4
           + 35 * xy * T3 + (5 * y2 - 6 * x2) * T2 - 3 * xy * T - 3 * y2) / d3,
          (x * T5 + 7 * y * T4 - 18 * x * T3 - 18 * y * T2 + 5 * x * T - y) / d1]
    Jy = [(xy * T7 + (2 * y2 - 7 * x2) * T6 - 25 * xy * T5 + (17 * x2 - 24 * y2) * T4
           + 35 * xy * T3 + (6 * y2 - 5 * x2) * T2 - 3 * xy * T + 3 * x2) / d3,
          -(y2 * T7 - 9 * xy * T6 + (14 * x2 - 15 * y2) * T5 + 37 * xy * T4
            + (11 * y2 - 16 * x2) * T3 - 19 * xy * T2 + (2 * x2 - 5 * y2) * T - xy) / d3,
          -(y * T5 - 7 * x * T4 - 18 * y * T3 + 18 * x * T2 + 5 * y * T + x) / d1]
    return np.array([Kx, Lx, Jx]), np.array([Ky, Ly, Jy])


_MATRICES = {SystemKind.CARTESIAN: cartesian_matrices, SystemKind.BIPOLAR: bipolar_matrices}


# ---------------------------------------------------------------------------
# jet systems


def remark2_derivatives(v):
    """x- and y-derivatives of (T, T_x, T_y) under the reduced two-line system."""
    T, tx, ty = v
    txx, txy, tyy = confocal_second_derivatives(T, tx, ty)
    return np.array([tx, txx, txy]), np.array([ty, txy, tyy])


def tangent_coefficients(T):
    """(a, b, e, f) with T_xx = a·T_xy + b·T_x² + e·T_y² + f·T_x·T_y and
    T_yy = −a·T_xy + e·T_x² + b·T_y² − f·T_x·T_y, and their T-derivatives."""
    q = T ** 4 - 1
    a = 2 * T / (1 - T * T)
    b = 2 * T * (T * T - 3) / q
    e = 4 * T / q
    f = 4 * (2 * T * T - 1) / q
    da = 2 * (1 + T * T) / (1 - T * T) ** 2
    db = (-2 * T ** 6 + 18 * T ** 4 - 6 * T * T + 6) / q ** 2
    de = -(12 * T ** 4 + 4) / q ** 2
    df = -16 * T * (T ** 4 - T * T + 1) / q ** 2
    return (a, b, e, f), (da, db, de, df)


def tangent_second_derivatives(T, tx, ty, txy):
    (a, b, e, f), _ = tangent_coefficients(T)
    txx = a * txy + b * tx * tx + e * ty * ty + f * tx * ty
    tyy = -a * txy + e * tx * tx + b * ty * ty - f * tx * ty
    return txx, tyy


def p_system(P, T, tx, ty):
    """(P_x, P_y) for the tangent-line coefficient P."""
    k = (P * P + 1) / (P * (T * T + 1) ** 2)
    px = k * (T * (P * P + 1) * tx + (P * P - T * T) * ty)
    py = k * ((1 - P * P * T * T) * tx - T * (P * P + 1) * ty)
    return px, py


def tangent_derivatives(v):
    """x- and y-derivatives of (P, T, T_x, T_y, T_xy) under the tangent system."""
    P, T, tx, ty, txy = v
    (a, b, e, f), (da, db, de, df) = tangent_coefficients(T)
    F = a * txy + b * tx * tx + e * ty * ty + f * tx * ty
    G = -a * txy + e * tx * tx + b * ty * ty - f * tx * ty
    # differentiate T_xx in y and T_yy in x, then solve the 2×2 system for
    # (T_xxy, T_xyy) using T_xxy = a·T_xyy + R1 and T_xyy = R2 − a·T_xxy
    r1 = (da * ty * txy + (db * tx * tx + de * ty * ty + df * tx * ty) * ty
          + 2 * b * tx * txy + 2 * e * ty * G + f * (txy * ty + tx * G))
    r2 = (-da * tx * txy + (de * tx * tx + db * ty * ty - df * tx * ty) * tx
          + 2 * e * tx * F + 2 * b * ty * txy - f * (F * ty + tx * txy))
    txxy = (r1 + a * r2) / (1 + a * a)
    txyy = r2 - a * txxy
    px, py = p_system(P, T, tx, ty)
    return (np.array([px, tx, F, txy, txxy]), np.array([py, ty, txy, G, txyy]))


_JETS = {SystemKind.REMARK2: remark2_derivatives, SystemKind.TANGENT: tangent_derivatives}


def confocal_jet(kind: SystemKind, fam: ConfocalFamily, p, lam0: float = 0.0,
                 branch: str = "ccw") -> JetState:
    """Jet state of the actual confocal field (and tangent web) at ``p``."""
    x, y = float(p[0]), float(p[1])
    T = _slope_T(x, y, fam.a2, fam.b2)
    tx, ty = slope_system(x, y, T)
    if kind is SystemKind.REMARK2:
        return JetState(np.array([T, tx, ty]), Point(x, y))
    if kind is SystemKind.TANGENT:
        _, txy, _ = confocal_second_derivatives(T, tx, ty)
        pair = tangent_slopes((x, y), ConicMember(fam, lam0))
        m = pair.m1 if branch == "ccw" else pair.m2
        return JetState(np.array([float(slope_P(m, T)), T, tx, ty, txy]), Point(x, y))
    raise ValueError(f"{kind} is not a jet system")


# ---------------------------------------------------------------------------
# transport


def _check_path_point(kind, fam, x, y, margin):
    c = fam.c
    if (abs(x) < margin or abs(y) < margin or math.hypot(x - c, y) < margin
            or math.hypot(x + c, y) < margin):
        raise SingularPointError(f"path point {(x, y)} on a singular set")
    if kind is SystemKind.TANGENT:
        T = _slope_T(x, y, fam.a2, fam.b2)
        if abs(T * T - 1) < margin:
            raise SingularPointError(f"path point {(x, y)} too close to T² = 1")


def integrate_path(deriv, path, y0, *, rtol=RTOL, atol=ATOL, check=None):
    """Integrate dv = deriv_x(p, v) dx + deriv_y(p, v) dy along a polyline.

    ``deriv(x, y, v)`` returns the pair of partial-derivative vectors.  Each
    segment is one adaptive Dormand–Prince 4(5) solve.
    """
    pts = [(float(p[0]), float(p[1])) for p in path]
    v = np.asarray(y0, dtype=float).copy()
    for (x0, y0_), (x1, y1) in zip(pts[:-1], pts[1:]):
        dx, dy = x1 - x0, y1 - y0_
        if dx == 0 and dy == 0:
            continue
        if check is not None:
            # spacing 0.01 cannot step over a singular strip of the default width
            n = max(9, int(math.ceil(math.hypot(dx, dy) / 0.01)) + 1)
            for s in np.linspace(0.0, 1.0, n):
                check(x0 + s * dx, y0_ + s * dy)

        def rhs(t, u, x0=x0, y0_=y0_, dx=dx, dy=dy):
            gx, gy = deriv(x0 + t * dx, y0_ + t * dy, u)
            return gx * dx + gy * dy

        sol = solve_ivp(rhs, (0.0, 1.0), v, method="RK45", rtol=rtol, atol=atol)
        if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
            raise FlowError(f"transport failed: {sol.message}")
        v = sol.y[:, -1]
    return v


def transport(kind: SystemKind, fam: ConfocalFamily, path, init, *, margin: float = 0.05,
              rtol: float = RTOL, atol: float = ATOL):
    """Transport ``init`` along the polyline ``path`` (starting at init.base).

    ``init`` is a :class:`FrameState` for CARTESIAN/BIPOLAR and a
    :class:`JetState` for REMARK2/TANGENT.  An empty path returns ``init``.
    """
    path = list(path)
    if not path:
        return init
    base = (float(init.base[0]), float(init.base[1]))
    if (float(path[0][0]), float(path[0][1])) != base:
        path = [base] + path
    end = Point(float(path[-1][0]), float(path[-1][1]))

    def check(x, y):
        _check_path_point(kind, fam, x, y, margin)

    if kind in _MATRICES:
        mats = _MATRICES[kind]
        a2, b2 = fam.a2, fam.b2

        def deriv(x, y, u):
            A, B = mats(x, y, _slope_T(x, y, a2, b2))
            Fm = u.reshape(3, 3)
            return (A @ Fm).ravel(), (B @ Fm).ravel()

        if init.condition > MAX_COND:
            raise FrameDegeneracyError("initial frame is singular")
        out = integrate_path(deriv, path, init.F.ravel(), rtol=rtol, atol=atol, check=check)
        state = FrameState(out.reshape(3, 3), end)
        if state.condition > MAX_COND:
            raise FrameDegeneracyError(f"frame condition number {state.condition:.3g}")
        return state
    if kind in _JETS:
        jet = _JETS[kind]

        out = integrate_path(lambda x, y, u: jet(u), path, init.values, rtol=rtol,
                             atol=atol, check=check)
        return JetState(out, end)
    raise ValueError(f"unknown system kind {kind}")


def _state_vec(s):
    return s.F.ravel() if isinstance(s, FrameState) else np.asarray(s.values)


def loop_defect(kind: SystemKind, fam: ConfocalFamily, loop, init, **kw) -> float:
    """‖transport around the closed polyline − init‖ / ‖init‖."""
    loop = list(loop)
    if len(loop) < 2:
        return 0.0
    if loop[0] != loop[-1]:
        loop = loop + [loop[0]]
    start = Point(float(loop[0][0]), float(loop[0][1]))
    if isinstance(init, FrameState):
        init = FrameState(init.F, start)
    else:
        init = JetState(init.values, start)
    out = transport(kind, fam, loop, init, **kw)
    v0 = _state_vec(init)
    return float(np.linalg.norm(_state_vec(out) - v0) / np.linalg.norm(v0))


def square_loop(corner, side: float):
    x, y = float(corner[0]), float(corner[1])
    return [(x, y), (x + side, y), (x + side, y + side), (x, y + side), (x, y)]


def circle_loop(center, radius: float, n: int = 32):
    cx, cy = float(center[0]), float(center[1])
    t = 2 * np.pi * np.arange(n + 1) / n
    pts = [(cx + radius * math.cos(s), cy + radius * math.sin(s)) for s in t]
    pts[-1] = pts[0]
    return pts


# ---------------------------------------------------------------------------
# arc points and the displayed moving-frame lines / conic


def _net_vectors(kind, T):
    """Moving-frame coordinates of [M], [N], [K], [L]."""
    if kind is SystemKind.CARTESIAN:
        M, N = (T, -1.0, 0.0), (1.0, T, 0.0)
    elif kind is SystemKind.BIPOLAR:
        k = (1 - T * T) / (1 + T * T)
        M, N = (k, -k * T, 0.0), (k * T, k, 0.0)
    else:
        raise ValueError(f"{kind} has no frame arcs")
    return np.array([M, N, (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)])


def frame_arc_points(kind: SystemKind, state: FrameState, fam: ConfocalFamily,
                     coords: str = "fixed") -> np.ndarray:
    """The four projective points [M⃗], [N⃗], [K⃗], [L⃗] at ``state.base``.

    Cartesian: M⃗ = T·K⃗ − L⃗ (vertical lines), N⃗ = K⃗ + T·L⃗ (horizontal
    lines), K⃗ (ellipses), L⃗ (hyperbolas).  Bipolar: M⃗ ∝ K⃗ − T·L⃗ (elliptic
    pencil), N⃗ ∝ T·K⃗ + L⃗ (hyperbolic pencil), then K⃗, L⃗.  ``coords`` selects
    fixed solution-space coordinates or components in the moving frame.
    Rows are normalized projective points in the web order.
    """
    from .rank_quartic import normalize

    x, y = state.base
    T = _slope_T(float(x), float(y), fam.a2, fam.b2)
    C = _net_vectors(kind, T)
    if coords == "moving":
        P = C
    elif coords == "fixed":
        P = C @ state.F
    else:
        raise ValueError("coords must be 'fixed' or 'moving'")
    if np.any(np.linalg.norm(P, axis=1) <= 1e-14):
        raise SingularPointError("arc point vanishes")
    return normalize(P)


def displayed_lines(kind: SystemKind, x, y, T) -> dict:
    """Line coefficients (X, Y, Z) in the moving frame, keyed by arc name."""
    D = T * T + 1
    if kind is SystemKind.CARTESIAN:
        den = 2 * x * y * D * D
        return {
            "M": np.array([1.0, T, -(y * T ** 5 - 3 * x * T ** 4 - 6 * y * T ** 3
                                     + 6 * x * T ** 2 + y * T + x) / den]),
            "N": np.array([-T, 1.0, -(x * T ** 5 + 3 * y * T ** 4 - 6 * x * T ** 3
                                      - 6 * y * T ** 2 + x * T - y) / den]),
        }
    if kind is SystemKind.BIPOLAR:
        d1 = 2 * x * y * D * D
        return {
            "M": np.array([T, 1.0, (x * T + y) / (2 * x * y)]),
            "N": np.array([1.0, -T, (y * T - x) / (2 * x * y)]),
            "K": np.array([0.0, 1.0, -(y * T ** 4 - 2 * x * T ** 3 - 4 * y * T ** 2
                                       + 2 * x * T - y) / d1]),
            "L": np.array([1.0, 0.0, (x * T ** 4 + 2 * y * T ** 3 - 4 * x * T ** 2
                                      - 2 * y * T - x) / d1]),
        }
    raise ValueError(f"{kind} has no displayed lines")


def displayed_conic(x, y, T) -> np.ndarray:
    """Symmetric matrix of the moving-frame conic through the [K⃗], [L⃗] arcs."""
    D = T * T + 1
    xz = -(y * T * T - 2 * x * T - y) / (2 * x * y * D)
    yz = (x * T * T + 2 * y * T - x) / (2 * x * y * D)
    zz = -(x * y * (T ** 8 - 4 * T ** 6 - 26 * T ** 4 + 12 * T ** 2 + 1)
           + 2 * (y * y - x * x) * T * (T ** 6 + T ** 4 - 9 * T ** 2 - 1)) / (
        4 * x * x * y * y * D ** 4)
    return np.array([[0.0, 0.5, xz / 2], [0.5, 0.0, yz / 2], [xz / 2, yz / 2, zz]])


def fixed_line(state: FrameState, line) -> np.ndarray:
    """Moving-frame line at ``state.base`` expressed in fixed coordinates."""
    return np.linalg.solve(state.F, np.asarray(line, dtype=float))


def fixed_conic(state: FrameState, Q) -> np.ndarray:
    Finv = np.linalg.inv(state.F)
    return Finv @ np.asarray(Q, dtype=float) @ Finv.T


def state_lines(kind: SystemKind, state: FrameState, fam: ConfocalFamily) -> dict:
    """Displayed lines of ``kind`` at the state's base, in fixed coordinates."""
    x, y = float(state.base[0]), float(state.base[1])
    T = _slope_T(x, y, fam.a2, fam.b2)
    return {k: fixed_line(state, v) for k, v in displayed_lines(kind, x, y, T).items()}


def state_conic(state: FrameState, fam: ConfocalFamily) -> np.ndarray:
    x, y = float(state.base[0]), float(state.base[1])
    T = _slope_T(x, y, fam.a2, fam.b2)
    return fixed_conic(state, displayed_conic(x, y, T))


def transported_arcs(kind: SystemKind, fam: ConfocalFamily, base, points,
                     **kw) -> tuple[list, list]:
    """Frame arcs at ``points``, transporting an identity frame from ``base``.

    Each point is reached along the L-shaped path (horizontal, then
    vertical).  Returns (arcs, states): four (n, 3) arrays in web order and
    the transported frames.
    """
    init = FrameState.identity(base)
    rows, states = [], []
    for p in points:
        path = [(float(base[0]), float(base[1])), (float(p[0]), float(base[1])),
                (float(p[0]), float(p[1]))]
        st = transport(kind, fam, path, init, **kw)
        states.append(st)
        rows.append(frame_arc_points(kind, st, fam))
    R = np.array(rows)
    if len(R) == 0:
        raise DomainError("no arc samples")
    return [R[:, i, :] for i in range(4)], states


def displayed_incidence(kind: SystemKind, fam: ConfocalFamily, base, points, **kw) -> dict:
    """Largest |line · point| (unit line) between the displayed lines at ``base``
    and the frame arcs transported to ``points``; for CARTESIAN also the
    largest |Pᵀ C P| of the K⃗, L⃗ arcs on the displayed conic (unit norm).
    """
    arcs, _ = transported_arcs(kind, fam, base, points, **kw)
    init = FrameState.identity(base)
    names = ("M", "N", "K", "L")
    out = {}
    for name, line in state_lines(kind, init, fam).items():
        line = line / np.linalg.norm(line)
        out[name] = float(np.max(np.abs(arcs[names.index(name)] @ line)))
    if kind is SystemKind.CARTESIAN:
        C = state_conic(init, fam)
        C = C / np.linalg.norm(C)
        out["conic"] = float(max(np.max(np.abs(np.einsum("ni,ij,nj->n", a, C, a)))
                                 for a in arcs[2:]))
    return out
