"""Finite-difference verification of the differential identities of the webs.

Every identity is written as a list of left-hand terms and a list of
right-hand terms.  The relative residual is |Σ lhs − s·Σ rhs| divided by the
largest absolute term, with s = 1 (s ≠ 1 gives a perturbed negative control).
Derivatives of the exact fields (T from the confocal net, P from the tangent
lines, σ from the bipolar pencil) are central differences of step h.  Second
derivatives of T are differences of the first-derivative system, which is
itself checked by the ``T_system`` identity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .conic_geometry import (ConfocalFamily, ConicMember, bipolar_coords,
                             confocal_second_derivatives, confocal_slope, elliptic_coords,
                             slope_P, slope_system, tangent_slopes)
from .errors import DomainError, SingularPointError
from .frobenius import integrate_path
from .web_core import Box

H_VALUES = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
# The truncation error scales like (h/ℓ)² with ℓ the distance to the x-axis,
# the foci, T² = 1 or the tangent conic; this region keeps ℓ ≳ 1.
PDE_BOX = Box(0.8, 2.0, 1.0, 1.8)
PDE_MARGIN = 0.1


class IdentityId(enum.Enum):
    T_SYSTEM = "T_system"
    LAPLACE_T = "laplace_T"
    P_SYSTEM = "P_system"
    CURVATURE_B = "curvature_B"
    S_COMPAT = "S_compat"
    TXX_TYY_TANGENT = "Txx_Tyy_tangent"
    R_FORM_CLOSED = "R_form_closed"
    REMARK2_SPLIT = "remark2_split"
    BIPOLAR_S = "bipolar_S"


@dataclass(frozen=True)
class SlopeField:
    """A slope field T(x, y), optionally with analytic first derivatives."""

    name: str
    T: Callable
    first: Callable | None = None


def confocal_field(fam: ConfocalFamily) -> SlopeField:
    def T(x, y):
        return float(confocal_slope((x, y), fam))

    def first(x, y):
        t = T(x, y)
        return slope_system(x, y, t)

    return SlopeField("confocal", T, first)


def linear_field() -> SlopeField:
    """T = x + y, a slope field of no confocal net (negative control)."""
    return SlopeField("x+y", lambda x, y: x + y, lambda x, y: (1.0, 1.0))


@dataclass(frozen=True)
class ResidualReport:
    identity: IdentityId
    point: tuple
    h_values: list
    residuals: list
    order_estimate: float


# ---------------------------------------------------------------------------
# field jets by central differences


def _first(field: SlopeField, x, y, h):
    if field.first is not None:
        return field.first(x, y)
    return ((field.T(x + h, y) - field.T(x - h, y)) / (2 * h),
            (field.T(x, y + h) - field.T(x, y - h)) / (2 * h))


def _jet(field: SlopeField, x, y, h):
    """(T, T_x, T_y, T_xx, T_xy, T_yy) with second derivatives from differences."""
    T = field.T(x, y)
    tx, ty = _first(field, x, y, h)
    txp, _ = _first(field, x + h, y, h)
    txm, _ = _first(field, x - h, y, h)
    txq, typ = _first(field, x, y + h, h)
    txn, tym = _first(field, x, y - h, h)
    txx = (txp - txm) / (2 * h)
    txy = (txq - txn) / (2 * h)
    tyy = (typ - tym) / (2 * h)
    return T, tx, ty, txx, txy, tyy


def _p_field(fam, lam0):
    Q = ConicMember(fam, lam0)

    def P(x, y):
        T = float(confocal_slope((x, y), fam))
        return float(slope_P(tangent_slopes((x, y), Q).m1, T))

    return P


def _fd(f, x, y, h):
    return ((f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h))


# ---------------------------------------------------------------------------
# identities: each returns a list of (lhs_terms, rhs_terms) equations


def _t_system(field, fam, x, y, h, lam0):
    T = field.T(x, y)
    tx = (field.T(x + h, y) - field.T(x - h, y)) / (2 * h)
    ty = (field.T(x, y + h) - field.T(x, y - h)) / (2 * h)
    d = x * y * (T * T + 1)
    return [([tx], [T * y / d, 2 * x * T * T / d, -y * T ** 3 / d]),
            ([ty], [T * x / d, -2 * y * T * T / d, -x * T ** 3 / d])]


def _laplace(field, fam, x, y, h, lam0):
    T, tx, ty, txx, _, tyy = _jet(field, x, y, h)
    return [([txx, tyy], [2 * T * tx * tx / (1 + T * T), 2 * T * ty * ty / (1 + T * T)])]


def _p_sys(field, fam, x, y, h, lam0):
    P = _p_field(fam, lam0)
    T = field.T(x, y)
    tx, ty = _first(field, x, y, h)
    p = P(x, y)
    px, py = _fd(P, x, y, h)
    k = (p * p + 1) / (p * (T * T + 1) ** 2)
    return [([px], [k * T * (p * p + 1) * tx, k * (p * p - T * T) * ty]),
            ([py], [k * (1 - p * p * T * T) * tx, -k * T * (p * p + 1) * ty])]


def _curv_b(field, fam, x, y, h, lam0):
    T, tx, ty, txx, txy, tyy = _jet(field, x, y, h)
    p = _p_field(fam, lam0)(x, y)
    P2 = p * p
    c1 = (T * T * P2 + 2 * P2 + 1) / (2 * T * (P2 + 1))
    c2 = (2 * T * T * P2 + P2 + T * T) / (2 * T * (P2 + 1))
    den = T * (T * T + 1) * (P2 + 1)
    return [([c1 * txx, c2 * tyy, -txy],
             [T * (T * T * P2 + 4 * P2 + 3) * tx * tx / den,
              -2 * (2 * T * T - 1) * (P2 + 1) * tx * ty / den,
              T * (2 * T * T * P2 - P2 + T * T - 2) * ty * ty / den])]


def _s_value(field, x, y, h):
    T, tx, ty, txx, _, _ = _jet(field, x, y, h)
    return txx - T * (tx * tx + ty * ty) / (T * T + 1)


def _s_compat(field, fam, x, y, h, lam0):
    T, tx, ty, _, txy, _ = _jet(field, x, y, h)
    S = _s_value(field, x, y, h)
    sx, sy = _fd(lambda u, v: _s_value(field, u, v, h), x, y, h)
    D = T * T + 1
    return [([sx], [txy * (4 * T * tx + (T * T - 3) * ty) / (T * D),
                    tx * ty * ((T * T + 3) * ty - 4 * T * tx) / (T * T * D),
                    S * tx * (3 * T * T + 1) / (T * D)]),
            ([sy], [txy * (4 * T * ty - (T * T - 3) * tx) / (T * D),
                    -tx * ty * ((T * T + 3) * tx + 4 * T * ty) / (T * T * D),
                    S * ty * (3 * T * T + 1) / (T * D)])]


def _txx_tyy_tan(field, fam, x, y, h, lam0):
    T, tx, ty, txx, txy, tyy = _jet(field, x, y, h)
    q = T ** 4 - 1
    return [([txx], [2 * T / (1 - T * T) * txy, 2 * T * (T * T - 3) / q * tx * tx,
                     4 * T / q * ty * ty, 4 * (2 * T * T - 1) / q * tx * ty]),
            ([tyy], [2 * T / (T * T - 1) * txy, 4 * T / q * tx * tx,
                     2 * T * (T * T - 3) / q * ty * ty, -4 * (2 * T * T - 1) / q * tx * ty])]


def _r_form(field, fam, x, y, h, lam0):
    # d ln R = −½ d ln(1+T²) + (T_y dx − T_x dy)/(1+T²); the curl is taken term by term
    def parts(u, v):
        T = field.T(u, v)
        tx, ty = _first(field, u, v, h)
        D = 1 + T * T
        return np.array([-T * tx / D, ty / D, -T * ty / D, -tx / D])

    dx = (parts(x + h, y) - parts(x - h, y)) / (2 * h)
    dy = (parts(x, y + h) - parts(x, y - h)) / (2 * h)
    return [([dx[2], dx[3]], [dy[0], dy[1]])]


def _remark2(field, fam, x, y, h, lam0):
    T, tx, ty, txx, txy, tyy = _jet(field, x, y, h)
    D = T * T + 1
    D3 = D ** 3
    return [
        ([txx, -T * (tx * tx + ty * ty) / D],
         [T * (tx * tx - ty * ty) / D, -(T ** 4 - 4 * T * T - 1) * tx * ty / (2 * T * T * D),
          (T * T - 1) * txy / (2 * T)]),
        ([txy], [8 * T * T * (ty * ty - tx * tx) / D3,
                 (T ** 6 + 11 * T ** 4 - 5 * T * T + 1) * tx * ty / (T * D3)]),
        ([txx], [2 * T * (T ** 4 + 3) * tx * tx / D3,
                 2 * (3 * T ** 4 - 2 * T * T + 3) * tx * ty / D3,
                 4 * T * (T * T - 1) * ty * ty / D3]),
        ([tyy], [4 * T * (T * T - 1) * tx * tx / D3,
                 -2 * (3 * T ** 4 - 2 * T * T + 3) * tx * ty / D3,
                 2 * T * (T ** 4 + 3) * ty * ty / D3]),
    ]


def _bipolar_s(field, fam, x, y, h, lam0):
    def sigma(u, v):
        return float(bipolar_coords((u, v), fam.c)[0])

    sx, sy = _fd(sigma, x, y, h)
    T = field.T(x, y)
    return [([sx / sy], [2 * T / (1 - T * T)])]


_IDENTITIES = {
    IdentityId.T_SYSTEM: _t_system,
    IdentityId.LAPLACE_T: _laplace,
    IdentityId.P_SYSTEM: _p_sys,
    IdentityId.CURVATURE_B: _curv_b,
    IdentityId.S_COMPAT: _s_compat,
    IdentityId.TXX_TYY_TANGENT: _txx_tyy_tan,
    IdentityId.R_FORM_CLOSED: _r_form,
    IdentityId.REMARK2_SPLIT: _remark2,
    IdentityId.BIPOLAR_S: _bipolar_s,
}

_NEEDS_P = {IdentityId.P_SYSTEM, IdentityId.CURVATURE_B}
_NEEDS_UNIT_T = {IdentityId.P_SYSTEM, IdentityId.CURVATURE_B, IdentityId.TXX_TYY_TANGENT,
                 IdentityId.BIPOLAR_S}


def check_point(identity: IdentityId, fam: ConfocalFamily, p, margin: float = 0.05,
                lam0: float = 0.0) -> None:
    """Raise :class:`SingularPointError` if a denominator of the identity is near zero."""
    x, y = float(p[0]), float(p[1])
    c = fam.c
    if (abs(x) < margin or abs(y) < margin or math.hypot(x - c, y) < margin
            or math.hypot(x + c, y) < margin):
        raise SingularPointError(f"{(x, y)} near an axis or a focus")
    if identity in _NEEDS_UNIT_T:
        T = float(confocal_slope((x, y), fam))
        if abs(T * T - 1) < margin:
            raise SingularPointError(f"{(x, y)} near T² = 1")
    if identity in _NEEDS_P:
        l1, l2 = elliptic_coords((x, y), fam)
        outside = l1 <= lam0 - margin if lam0 < fam.b2 else l2 >= lam0 + margin
        if not outside:
            raise SingularPointError(f"{(x, y)} not outside the tangent conic")


def residual(identity: IdentityId, fam: ConfocalFamily, p, h: float, *,
             field: SlopeField | None = None, rhs_scale: float = 1.0,
             lam0: float = 0.0, margin: float = 0.05) -> float:
    """Relative residual of the identity at ``p`` with difference step ``h``.

    Several equations (x- and y-parts) report their maximum.
    """
    if not 1e-5 <= h <= 1e-1:
        raise DomainError("h must lie in [1e-5, 1e-1]")
    check_point(identity, fam, p, margin + 2 * h, lam0)
    field = field or confocal_field(fam)
    x, y = float(p[0]), float(p[1])
    worst = 0.0
    for lhs, rhs in _IDENTITIES[identity](field, fam, x, y, h, lam0):
        terms = [float(t) for t in lhs] + [float(t) for t in rhs]
        scale = max(abs(t) for t in terms)
        if not math.isfinite(scale):
            raise SingularPointError("non-finite term in identity")
        if scale == 0:
            continue
        worst = max(worst, abs(sum(lhs) - rhs_scale * sum(rhs)) / scale)
    return worst


def order_check(identity: IdentityId, fam: ConfocalFamily, p, h_values=H_VALUES,
                **kw) -> ResidualReport:
    """Residuals over ``h_values`` and the log-log slope (the observed order)."""
    res = [residual(identity, fam, p, h, **kw) for h in h_values]
    lh = np.log(np.asarray(h_values))
    lr = np.log(np.maximum(np.asarray(res), 1e-300))
    order = float(np.polyfit(lh, lr, 1)[0])
    return ResidualReport(identity, (float(p[0]), float(p[1])), list(h_values), res, order)


def sample_points(identity: IdentityId, fam: ConfocalFamily, n: int, box, seed: int = 0,
                  margin: float = 0.05, lam0: float = 0.0):
    """``n`` random points of ``box`` that are admissible for the identity."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(200 * n):
        p = (float(rng.uniform(box.xmin, box.xmax)), float(rng.uniform(box.ymin, box.ymax)))
        try:
            check_point(identity, fam, p, margin + 0.03, lam0)
        except SingularPointError:
            continue
        pts.append(p)
        if len(pts) == n:
            return pts
    raise DomainError(f"too few admissible points for {identity.value}")


# ---------------------------------------------------------------------------
# closedness of the S system along loops


def s_system_derivatives(v):
    """x- and y-derivatives of (T, T_x, T_y, T_xy, S) for two conformally flat nets."""
    T, tx, ty, txy, S = v
    D = T * T + 1
    W = tx * tx + ty * ty
    txx = S + T * W / D
    tyy = -S + T * W / D
    sx = (txy * (4 * T * tx + (T * T - 3) * ty) / (T * D)
          + tx * ty * ((T * T + 3) * ty - 4 * T * tx) / (T * T * D)
          + S * tx * (3 * T * T + 1) / (T * D))
    sy = (txy * (4 * T * ty - (T * T - 3) * tx) / (T * D)
          - tx * ty * ((T * T + 3) * tx + 4 * T * ty) / (T * T * D)
          + S * ty * (3 * T * T + 1) / (T * D))
    txxy = sy + ty * W / D + 2 * T * (tx * txy + ty * tyy) / D - 2 * T * T * ty * W / D ** 2
    txyy = -sx + tx * W / D + 2 * T * (tx * txx + ty * txy) / D - 2 * T * T * tx * W / D ** 2
    return (np.array([tx, txx, txy, txxy, sx]), np.array([ty, txy, tyy, txyy, sy]))


def confocal_s_state(fam: ConfocalFamily, p) -> np.ndarray:
    x, y = float(p[0]), float(p[1])
    T = float(confocal_slope((x, y), fam))
    tx, ty = slope_system(x, y, T)
    txx, txy, _ = confocal_second_derivatives(T, tx, ty)
    return np.array([T, tx, ty, txy, txx - T * (tx * tx + ty * ty) / (T * T + 1)])


def s_loop_defect(fam: ConfocalFamily, loop, state=None) -> float:
    """Relative change of (T, T_x, T_y, T_xy, S) after transport around a loop."""
    loop = list(loop)
    if loop[0] != loop[-1]:
        loop.append(loop[0])
    v0 = confocal_s_state(fam, loop[0]) if state is None else np.asarray(state, dtype=float)
    v1 = integrate_path(lambda x, y, v: s_system_derivatives(v), loop, v0)
    return float(np.linalg.norm(v1 - v0) / np.linalg.norm(v0))


@dataclass(frozen=True)
class SuiteResult:
    reports: list           # ResidualReports of the true identities
    controls: list          # ResidualReports of the negative controls
    s_loops: list           # relative S-transport defects


def run_suite(fam: ConfocalFamily, n: int = 10, seed: int = 0, box: Box = PDE_BOX,
              margin: float = PDE_MARGIN, lam0: float = 0.0) -> SuiteResult:
    """All identities at ``n`` points each, both negative controls, and S loops."""
    from .frobenius import circle_loop, square_loop

    reports, controls = [], []
    for ident in IdentityId:
        pts = sample_points(ident, fam, n, box, seed, margin, lam0)
        reports += [order_check(ident, fam, p, lam0=lam0) for p in pts]
        controls.append(order_check(ident, fam, pts[0], lam0=lam0, rhs_scale=1.01))
        controls.append(order_check(ident, fam, pts[0], lam0=lam0, field=linear_field()))
    cx, cy = 0.5 * (box.xmin + box.xmax), 0.5 * (box.ymin + box.ymax)
    loops = [square_loop((cx, cy), 0.2), circle_loop((cx, cy), 0.15),
             square_loop((box.xmin + 0.2, box.ymax - 0.4), 0.2)]
    return SuiteResult(reports, controls, [s_loop_defect(fam, lp) for lp in loops])
