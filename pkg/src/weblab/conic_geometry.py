"""Analytic geometry of confocal conics, bipolar pencils and tangent lines.

All point-valued functions accept either scalars or numpy arrays for the
coordinates (a :class:`Point` may hold arrays) and broadcast elementwise.
Scalar inputs give Python floats back.

Slopes are extended reals: a vertical direction is ``math.inf`` (never
``-inf``), handled by case analysis rather than a large float.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import elliprf

from .errors import DegenerateWarning, DomainError, SingularPointError

INF = math.inf

# relative slack used to snap nearly vertical / horizontal directions
_SNAP = 8 * np.finfo(float).eps


class Point(NamedTuple):
    x: float | np.ndarray
    y: float | np.ndarray


class LineSlopePair(NamedTuple):
    m1: float | np.ndarray
    m2: float | np.ndarray


@dataclass(frozen=True)
class ConfocalFamily:
    """Confocal conics x²/(a2−λ) + y²/(b2−λ) = 1 with foci (±c, 0)."""

    a2: float = 2.0
    b2: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.a2) and math.isfinite(self.b2)):
            raise DomainError("family parameters must be finite")
        if not self.a2 > self.b2 > 0:
            raise DomainError(f"need a2 > b2 > 0, got a2={self.a2}, b2={self.b2}")

    @property
    def c(self) -> float:
        return math.sqrt(self.a2 - self.b2)

    @property
    def foci(self) -> tuple[Point, Point]:
        return Point(-self.c, 0.0), Point(self.c, 0.0)

    def member(self, lam: float) -> "ConicMember":
        return ConicMember(self, lam)


@dataclass(frozen=True)
class ConicMember:
    """The conic of ``family`` with pencil parameter ``lam``."""

    family: ConfocalFamily
    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise DomainError("lambda must be finite")
        if self.lam == self.family.b2 or self.lam >= self.family.a2:
            raise DomainError(f"degenerate pencil parameter {self.lam}")

    @property
    def A(self) -> float:
        return self.family.a2 - self.lam

    @property
    def B(self) -> float:
        return self.family.b2 - self.lam

    @property
    def is_ellipse(self) -> bool:
        return self.lam < self.family.b2

    def value(self, p) -> float | np.ndarray:
        """x²/A + y²/B − 1 (zero on the conic)."""
        x, y = _xy(p)
        return _ret(x * x / self.A + y * y / self.B - 1.0)


def _xy(p):
    x, y = p
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("non-finite point coordinates")
    return x, y


def _ret(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def _check_any(mask, exc, msg):
    if np.any(mask):
        raise exc(msg)


# ---------------------------------------------------------------------------
# extended-real slopes


def slope_direction(m) -> tuple[np.ndarray, np.ndarray]:
    """Unit direction (1, m)/|(1, m)|, or (0, 1) for an infinite slope."""
    m = np.asarray(m, dtype=float)
    vert = np.isinf(m)
    ms = np.where(vert, 0.0, m)
    n = np.hypot(1.0, ms)
    return np.where(vert, 0.0, 1.0 / n), np.where(vert, 1.0, ms / n)


def slope_from_direction(vx, vy):
    """Slope of the direction (vx, vy); exactly ``inf`` when vertical."""
    vx = np.asarray(vx, dtype=float)
    vy = np.asarray(vy, dtype=float)
    n = np.hypot(vx, vy)
    _check_any(n == 0, SingularPointError, "zero direction vector")
    vert = np.abs(vx) <= _SNAP * n
    horiz = np.abs(vy) <= _SNAP * n
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(vert, INF, np.where(horiz, 0.0, vy / vx))
    return _ret(m)


def _normalize_inf(m):
    m = np.asarray(m, dtype=float)
    return np.where(np.isinf(m), INF, m)


def slope_angle_difference(m1, m2):
    """Angle in [0, π/2] between two lines given by extended-real slopes."""
    ux, uy = slope_direction(m1)
    vx, vy = slope_direction(m2)
    return _ret(np.arctan2(np.abs(ux * vy - uy * vx), np.abs(ux * vx + uy * vy)))


# ---------------------------------------------------------------------------
# elliptic coordinates


def elliptic_coords(p, fam: ConfocalFamily):
    """The two confocal parameters (λ1 ≤ λ2) of the conics through ``p``.

    λ1 belongs to the ellipse and λ2 to the hyperbola.  Roots come from the
    stable form of the quadratic; the discriminant is evaluated as (r1·r2)²,
    with r1, r2 the focal distances, so it is never negative.  Points on an
    axis give a degenerate root (returned, with a :class:`DegenerateWarning`).
    """
    x, y = _xy(p)
    a2, b2, c = fam.a2, fam.b2, fam.c
    bq = x * x + y * y - a2 - b2
    cq = a2 * b2 - b2 * x * x - a2 * y * y
    sd = np.hypot(x - c, y) * np.hypot(x + c, y)
    q = -0.5 * (bq + np.where(bq >= 0, 1.0, -1.0) * sd)
    with np.errstate(divide="ignore", invalid="ignore"):
        other = np.where(q != 0, cq / np.where(q != 0, q, 1.0), 0.0)
    lam1 = np.minimum(q, other)
    lam2 = np.maximum(q, other)
    if np.any((x == 0) | (y == 0)):
        warnings.warn("point on a coordinate axis: degenerate elliptic coordinate",
                      DegenerateWarning, stacklevel=2)
    return _ret(lam1), _ret(lam2)


def elliptic_gradients(p, fam: ConfocalFamily):
    """Gradients ((∂xλ1, ∂yλ1), (∂xλ2, ∂yλ2)) by implicit differentiation."""
    x, y = _xy(p)
    c = fam.c
    sd = np.hypot(x - c, y) * np.hypot(x + c, y)
    _check_any(sd == 0, SingularPointError, "gradient undefined at a focus")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        lam1, lam2 = elliptic_coords((x, y), fam)
    g1 = (2 * x * (lam1 - fam.b2) / sd, 2 * y * (lam1 - fam.a2) / sd)
    g2 = (-2 * x * (lam2 - fam.b2) / sd, -2 * y * (lam2 - fam.a2) / sd)
    return tuple(map(_ret, g1)), tuple(map(_ret, g2))


def confocal_slope(p, fam: ConfocalFamily):
    """Slope coefficient T with the ellipse leaf solving T dx + dy = 0.

    The ellipse through p has slope −T and the hyperbola slope 1/T.
    """
    x, y = _xy(p)
    _check_any((x == 0) | (y == 0), SingularPointError,
               "confocal slope is degenerate on the coordinate axes")
    lam1, _ = elliptic_coords((x, y), fam)
    return _ret(x * (fam.b2 - lam1) / (y * (fam.a2 - lam1)))


def slope_system(x, y, T):
    """Right-hand sides (T_x, T_y) of the confocal slope system."""
    d = x * y * (T * T + 1)
    return T * (y + 2 * x * T - y * T * T) / d, T * (x - 2 * y * T - x * T * T) / d


def confocal_slope_jet(p, fam: ConfocalFamily):
    """(T, T_x, T_y) with the derivatives taken from the slope system."""
    x, y = _xy(p)
    T = np.asarray(confocal_slope((x, y), fam))
    tx, ty = slope_system(x, y, T)
    return _ret(T), _ret(tx), _ret(ty)


def confocal_second_derivatives(T, tx, ty):
    """(T_xx, T_xy, T_yy) of a confocal slope field from (T, T_x, T_y).

    Uses the reduced second-order system satisfied by the confocal field
    (the two-line splitting case), so no finite differences are involved.
    """
    d3 = (T * T + 1) ** 3
    txy = 8 * T * T * (ty * ty - tx * tx) / d3 + (
        T ** 6 + 11 * T ** 4 - 5 * T * T + 1) * tx * ty / (T * d3)
    txx = (2 * T * (T ** 4 + 3) * tx * tx + 2 * (3 * T ** 4 - 2 * T * T + 3) * tx * ty
           + 4 * T * (T * T - 1) * ty * ty) / d3
    tyy = (4 * T * (T * T - 1) * tx * tx - 2 * (3 * T ** 4 - 2 * T * T + 3) * tx * ty
           + 2 * T * (T ** 4 + 3) * ty * ty) / d3
    return txx, txy, tyy


# ---------------------------------------------------------------------------
# bipolar coordinates


def bipolar_coords(p, c: float = 1.0):
    """(σ, τ): σ is the angle subtended by the foci (±c, 0), τ = ½ ln(d₊²/d₋²).

    σ-levels are the circles through both foci (elliptic pencil), τ-levels
    the circles separating them (hyperbolic pencil).
    """
    x, y = _xy(p)
    d1 = (x + c) ** 2 + y * y
    d2 = (x - c) ** 2 + y * y
    _check_any((d1 == 0) | (d2 == 0), SingularPointError, "point is a focus")
    sigma = np.arctan2(2 * c * y, x * x + y * y - c * c)
    tau = 0.5 * np.log(d1 / d2)
    return _ret(sigma), _ret(tau)


def bipolar_gradients(p, c: float = 1.0):
    """Gradients (∇σ, ∇τ).  τ − iσ is holomorphic, so ∇σ = (τ_y, −τ_x)."""
    x, y = _xy(p)
    d1 = (x + c) ** 2 + y * y
    d2 = (x - c) ** 2 + y * y
    _check_any((d1 == 0) | (d2 == 0), SingularPointError, "point is a focus")
    tx = (x + c) / d1 - (x - c) / d2
    ty = y / d1 - y / d2
    return (_ret(ty), _ret(-tx)), (_ret(tx), _ret(ty))


def bipolar_slope(p, fam: ConfocalFamily):
    """S with the elliptic-pencil circle through p solving S dx + dy = 0.

    Computed from the gradient of σ; equals 2T/(1−T²) for the confocal T.
    """
    (sx, sy), _ = bipolar_gradients(p, fam.c)
    sx, sy = np.asarray(sx), np.asarray(sy)
    _check_any(sy == 0, SingularPointError,
               "bipolar slope is infinite where T² = 1")
    return _ret(sx / sy)


# ---------------------------------------------------------------------------
# tangent lines to a confocal member


def tangent_slopes(p, Q: ConicMember) -> LineSlopePair:
    """Slopes of the two tangents from ``p`` to ``Q``.

    The pair is oriented: ``m1`` is the tangent whose point of contact lies
    counterclockwise of p as seen from the centre, ``m2`` the clockwise one.
    A point on Q gives the double root (with a :class:`DegenerateWarning`);
    a point with no real tangents raises :class:`DomainError`.
    """
    x0, y0 = _xy(p)
    A, B = Q.A, Q.B
    a = x0 * x0 - A
    # a vanishes for a vertical tangent; snap rounding-level values to zero
    a = np.where(np.abs(a) <= 4 * np.finfo(float).eps * (x0 * x0 + abs(A)), 0.0, a)
    cc = y0 * y0 - B
    disc = A * y0 * y0 + B * x0 * x0 - A * B  # quarter discriminant
    scale = abs(A) * y0 * y0 + abs(B) * x0 * x0 + abs(A * B)
    tol = 64 * np.finfo(float).eps * scale
    _check_any(disc < -tol, DomainError, "point lies inside the conic: no real tangents")
    touching = np.abs(disc) <= tol
    if np.any(touching):
        warnings.warn("point on the conic: tangents coincide", DegenerateWarning,
                      stacklevel=2)
    sd = np.sqrt(np.where(touching, 0.0, disc))
    xy = x0 * y0
    q = xy + np.where(xy >= 0, 1.0, -1.0) * sd
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(a == 0, INF, q / np.where(a == 0, 1.0, a))
        r2 = np.where(q == 0, INF, cc / np.where(q == 0, 1.0, q))
        # q == 0 only when x0*y0 == 0 and the point touches Q on an axis
        r1 = np.where((q == 0) & (a != 0), 0.0, r1)
    r1, r2 = _normalize_inf(r1), _normalize_inf(r2)
    t1x, t1y = _tangency(x0, y0, r1, A, B)
    ccw1 = x0 * t1y - y0 * t1x > 0
    m1 = np.where(ccw1 | touching, r1, r2)
    m2 = np.where(ccw1 | touching, r2, r1)
    return LineSlopePair(_ret(m1), _ret(m2))


def _tangency(x0, y0, m, A, B):
    vert = np.isinf(m)
    ms = np.where(vert, 0.0, m)
    c0 = y0 - ms * x0
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(vert, x0, -A * ms / c0)
        ty = np.where(vert, 0.0, B / c0)
    return tx, ty


def tangency_point(p, m, Q: ConicMember) -> Point:
    """Point where the line through ``p`` with slope ``m`` touches ``Q``.

    For y = m·x + c₀ tangent to Q, the contact point is (−A·m/c₀, B/c₀).
    """
    x0, y0 = _xy(p)
    m = _normalize_inf(m)
    vert = np.isinf(m)
    c0 = y0 - np.where(vert, 0.0, m) * x0
    _check_any((~vert) & (c0 == 0), SingularPointError,
               "line passes through the centre: not a tangent")
    tx, ty = _tangency(x0, y0, m, Q.A, Q.B)
    return Point(_ret(tx), _ret(ty))


def bisector_slopes(pair: LineSlopePair) -> LineSlopePair:
    """The two orthogonal directions bisecting the angles of a line pair."""
    m1, m2 = (_normalize_inf(m) for m in pair)
    _check_any(m1 == m2, SingularPointError, "coincident input slopes")
    ux, uy = slope_direction(m1)
    vx, vy = slope_direction(m2)
    return LineSlopePair(slope_from_direction(ux + vx, uy + vy),
                         slope_from_direction(ux - vx, uy - vy))


def slope_P(m, T):
    """P = (T+m)/(1−mT): the tangent slope expressed in the net-adapted frame.

    Inverse of W² = (P−T)/(1+PT).  An infinite slope gives P = −1/T.
    """
    m = _normalize_inf(m)
    T = np.asarray(T, dtype=float)
    vert = np.isinf(m)
    ms = np.where(vert, 0.0, m)
    den = 1 - ms * T
    _check_any((~vert) & (den == 0), SingularPointError, "1 − m·T = 0")
    _check_any(vert & (T == 0), SingularPointError, "1 − m·T = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        P = np.where(vert, -1.0 / np.where(T == 0, 1.0, T), (T + ms) / den)
    return _ret(P)


def w_slopes(P, T):
    """Line slopes (W¹, W²) recovered from P and T."""
    P = np.asarray(P, dtype=float)
    T = np.asarray(T, dtype=float)
    with np.errstate(divide="ignore"):
        w1 = (P + T) / (P * T - 1)
        w2 = (P - T) / (1 + P * T)
    return _ret(_normalize_inf(w1)), _ret(_normalize_inf(w2))


# ---------------------------------------------------------------------------
# bipolar-preserving Möbius maps


def moebius_bipolar(z, k):
    """w = (kζ+1)/(kζ−1) with ζ = (z+1)/(z−1); fixes the foci ±1.

    In bipolar terms ln((w+1)/(w−1)) = ln k + ln((z+1)/(z−1)), so both
    coordinate pencils are preserved.  z = 1 is sent to 1 by continuity.
    """
    z = complex(z)
    k = complex(k)
    if k == 0:
        raise DomainError("k must be nonzero")
    if z == 1:
        return complex(1.0)
    kz = k * (z + 1) / (z - 1)
    if kz == 1:
        raise SingularPointError("pole of the Möbius map (kζ = 1)")
    return (kz + 1) / (kz - 1)


# ---------------------------------------------------------------------------
# sampling domain


def admissible(p, fam: ConfocalFamily, margin: float = 0.05, unit_T: bool = True):
    """Mask of points clear of the singular sets by ``margin``.

    Excludes strips |x| < δ, |y| < δ, disks of radius δ about the foci and,
    when ``unit_T``, the band |T² − 1| < δ.
    """
    x, y = _xy(p)
    c = fam.c
    ok = (np.abs(x) >= margin) & (np.abs(y) >= margin)
    ok &= np.hypot(x - c, y) >= margin
    ok &= np.hypot(x + c, y) >= margin
    if unit_T and np.any(ok):
        xs = np.where(ok, x, 1.0)
        ys = np.where(ok, y, 1.0)
        T = np.asarray(confocal_slope((xs, ys), fam))
        ok &= np.abs(T * T - 1) >= margin
    return ok if ok.ndim else bool(ok)


# ---------------------------------------------------------------------------
# parallelizing integrals of the tangent web


def parallel_integrals(lam1, lam2, fam: ConfocalFamily, lam0: float):
    """First integrals (s1(λ1), s2(λ2)) of the confocal net that parallelize
    the tangent lines to the member λ0: each tangent family is s1 ± s2 = const.

    ds1 = dλ1/√((λ0−λ1)(a2−λ1)(b2−λ1)), ds2 = dλ2/√((a2−λ2)(λ2−b2)(λ2−λ0)),
    both evaluated through Carlson's R_F.
    """
    a2, b2 = fam.a2, fam.b2
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    t = lam0 - lam1
    _check_any(t < 0, DomainError, "λ1 beyond the tangent conic")
    s1 = 2 * elliprf(t, t + a2 - lam0, t + b2 - lam0)
    lower = max(b2, lam0)
    alpha = a2 - lower
    beta = abs(lam0 - b2)
    u = lam2 - lower
    _check_any((u < 0) | (u > alpha), DomainError, "λ2 outside the tangent region")
    s2 = 2 * np.sqrt(u) * elliprf((alpha - u) * beta, alpha * (u + beta), alpha * beta)
    return _ret(s1), _ret(s2)


def parallel_integral_derivatives(lam1, lam2, fam: ConfocalFamily, lam0: float):
    """(ds1/dλ1, ds2/dλ2) of :func:`parallel_integrals`."""
    a2, b2 = fam.a2, fam.b2
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    d1 = 1 / np.sqrt((lam0 - lam1) * (a2 - lam1) * (b2 - lam1))
    d2 = 1 / np.sqrt((a2 - lam2) * (lam2 - b2) * np.abs(lam2 - lam0))
    return _ret(d1), _ret(d2)
