"""Concrete foliations and the webs studied in the package.

Each confocal-type foliation can use its raw coordinate as first integral or
a regularized one.  The regularized integrals send the singular leaves (axes,
foci) to infinity, so Abelian-relation densities become analytic in a wide
neighbourhood of the sampled range:

    ellipses    ln(b2 − λ1)           hyperbolas  ln((λ2 − b2)/(a2 − λ2))
    x-lines     ln|x|                 y-lines     ln|y|
    σ-pencil    ln|tan(σ/2)|          τ-pencil    ln|tanh(τ/2)|

The tangent web uses the parallelizing integrals s1(λ1), s2(λ2), in which
all four foliations are parallel line families.
"""

from __future__ import annotations

import warnings

import numpy as np

from .conic_geometry import (ConfocalFamily, ConicMember, DegenerateWarning,
                             admissible, bipolar_coords, bipolar_gradients,
                             elliptic_coords, elliptic_gradients,
                             parallel_integral_derivatives, parallel_integrals,
                             tangent_slopes)
from .errors import DomainError
from .web_core import Box, Foliation, Web, gradient_slope

DEFAULT_BOX = Box(0.6, 2.2, 0.6, 1.8)
DEFAULT_MARGIN = 0.05


def _lams(fam, x, y):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        return elliptic_coords((x, y), fam)


def _near_axes_or_foci(fam, margin):
    c = fam.c

    def singular(x, y):
        return ((np.abs(x) < margin) | (np.abs(y) < margin)
                | (np.hypot(x - c, y) < margin) | (np.hypot(x + c, y) < margin))

    return singular


def _near_foci(fam, margin):
    c = fam.c

    def singular(x, y):
        return (np.hypot(x - c, y) < margin) | (np.hypot(x + c, y) < margin)

    return singular


def ellipses(fam: ConfocalFamily, integral: str = "log", margin: float = DEFAULT_MARGIN):
    """Confocal ellipses, first integral λ1 ("raw") or ln(b2 − λ1) ("log")."""
    b2 = fam.b2

    def lam1(x, y):
        return np.asarray(_lams(fam, x, y)[0])

    def dlam1(x, y):
        return elliptic_gradients((x, y), fam)[0]

    if integral == "raw":
        u, grad = lam1, dlam1
    elif integral == "log":
        def u(x, y):
            return np.log(b2 - lam1(x, y))

        def grad(x, y):
            k = -1.0 / (b2 - lam1(x, y))
            gx, gy = dlam1(x, y)
            return k * gx, k * gy
    else:
        raise ValueError(f"unknown integral {integral!r}")
    return Foliation("ellipses", gradient_slope(grad), u, grad,
                     _near_axes_or_foci(fam, margin))


def hyperbolas(fam: ConfocalFamily, integral: str = "logit",
               margin: float = DEFAULT_MARGIN):
    """Confocal hyperbolas, first integral λ2 ("raw") or its logit on (b2, a2)."""
    a2, b2 = fam.a2, fam.b2

    def lam2(x, y):
        return np.asarray(_lams(fam, x, y)[1])

    def dlam2(x, y):
        return elliptic_gradients((x, y), fam)[1]

    if integral == "raw":
        u, grad = lam2, dlam2
    elif integral == "logit":
        def u(x, y):
            l2 = lam2(x, y)
            return np.log((l2 - b2) / (a2 - l2))

        def grad(x, y):
            l2 = lam2(x, y)
            k = 1.0 / (l2 - b2) + 1.0 / (a2 - l2)
            gx, gy = dlam2(x, y)
            return k * gx, k * gy
    else:
        raise ValueError(f"unknown integral {integral!r}")
    return Foliation("hyperbolas", gradient_slope(grad), u, grad,
                     _near_axes_or_foci(fam, margin))


def x_lines(integral: str = "log", margin: float = DEFAULT_MARGIN):
    """Vertical lines x = const (the foliation dx = 0)."""

    def slope(x, y):
        return np.full(np.broadcast(x, y).shape, np.inf)[()]

    if integral == "raw":
        def u(x, y):
            return x + 0.0 * y

        def grad(x, y):
            return np.ones_like(x + y), np.zeros_like(x + y)
    elif integral == "log":
        def u(x, y):
            return np.log(np.abs(x)) + 0.0 * y

        def grad(x, y):
            return 1.0 / x + 0.0 * y, np.zeros_like(x + y)
    else:
        raise ValueError(f"unknown integral {integral!r}")
    return Foliation("x_lines", slope, u, grad, lambda x, y: np.abs(x) < margin)


def y_lines(integral: str = "log", margin: float = DEFAULT_MARGIN):
    """Horizontal lines y = const (the foliation dy = 0)."""

    def slope(x, y):
        return np.zeros(np.broadcast(x, y).shape)[()]

    if integral == "raw":
        def u(x, y):
            return y + 0.0 * x

        def grad(x, y):
            return np.zeros_like(x + y), np.ones_like(x + y)
    elif integral == "log":
        def u(x, y):
            return np.log(np.abs(y)) + 0.0 * x

        def grad(x, y):
            return np.zeros_like(x + y), 1.0 / y + 0.0 * x
    else:
        raise ValueError(f"unknown integral {integral!r}")
    return Foliation("y_lines", slope, u, grad, lambda x, y: np.abs(y) < margin)


def sigma_pencil(fam: ConfocalFamily, integral: str = "logtan",
                 margin: float = DEFAULT_MARGIN):
    """Elliptic pencil: circles through both foci (levels of σ)."""
    c = fam.c

    def sigma(x, y):
        return np.asarray(bipolar_coords((x, y), c)[0])

    def dsigma(x, y):
        return bipolar_gradients((x, y), c)[0]

    if integral == "raw":
        u, grad = sigma, dsigma
    elif integral == "logtan":
        def u(x, y):
            return np.log(np.abs(np.tan(0.5 * sigma(x, y))))

        def grad(x, y):
            k = 1.0 / np.sin(sigma(x, y))
            gx, gy = dsigma(x, y)
            return k * gx, k * gy
    else:
        raise ValueError(f"unknown integral {integral!r}")

    near = _near_foci(fam, margin)
    return Foliation("sigma_pencil", gradient_slope(grad), u, grad,
                     lambda x, y: near(x, y) | (np.abs(y) < margin))


def tau_pencil(fam: ConfocalFamily, integral: str = "logtanh",
               margin: float = DEFAULT_MARGIN):
    """Hyperbolic pencil: circles separating the foci (levels of τ)."""
    c = fam.c

    def tau(x, y):
        return np.asarray(bipolar_coords((x, y), c)[1])

    def dtau(x, y):
        return bipolar_gradients((x, y), c)[1]

    if integral == "raw":
        u, grad = tau, dtau
    elif integral == "logtanh":
        def u(x, y):
            return np.log(np.abs(np.tanh(0.5 * tau(x, y))))

        def grad(x, y):
            k = 1.0 / np.sinh(tau(x, y))
            gx, gy = dtau(x, y)
            return k * gx, k * gy
    else:
        raise ValueError(f"unknown integral {integral!r}")

    near = _near_foci(fam, margin)
    return Foliation("tau_pencil", gradient_slope(grad), u, grad,
                     lambda x, y: near(x, y) | (np.abs(x) < margin))


def _tangent_exterior(fam, lam0, margin):
    near = _near_axes_or_foci(fam, margin)

    def singular(x, y):
        l1, l2 = _lams(fam, x, y)
        if lam0 < fam.b2:
            outside = np.asarray(l1) <= lam0 - margin
        else:
            outside = np.asarray(l2) >= lam0 + margin
        return near(x, y) | ~outside

    return singular


def _s_parts(fam, lam0):
    def s(x, y):
        l1, l2 = _lams(fam, x, y)
        return parallel_integrals(l1, l2, fam, lam0)

    def ds(x, y):
        l1, l2 = _lams(fam, x, y)
        d1, d2 = parallel_integral_derivatives(l1, l2, fam, lam0)
        (g1x, g1y), (g2x, g2y) = elliptic_gradients((x, y), fam)
        return (d1 * g1x, d1 * g1y), (d2 * g2x, d2 * g2y)

    return s, ds


def parallel_ellipses(fam: ConfocalFamily, lam0: float, margin: float = DEFAULT_MARGIN):
    """Confocal ellipses with the parallelizing integral s1(λ1)."""
    s, ds = _s_parts(fam, lam0)
    grad = lambda x, y: ds(x, y)[0]  # noqa: E731
    return Foliation("ellipses", gradient_slope(grad), lambda x, y: s(x, y)[0], grad,
                     _tangent_exterior(fam, lam0, margin))


def parallel_hyperbolas(fam: ConfocalFamily, lam0: float, margin: float = DEFAULT_MARGIN):
    """Confocal hyperbolas with the parallelizing integral s2(λ2)."""
    s, ds = _s_parts(fam, lam0)
    grad = lambda x, y: ds(x, y)[1]  # noqa: E731
    return Foliation("hyperbolas", gradient_slope(grad), lambda x, y: s(x, y)[1], grad,
                     _tangent_exterior(fam, lam0, margin))


def tangent_family(fam: ConfocalFamily, lam0: float, which: str,
                   margin: float = DEFAULT_MARGIN):
    """One of the two families of tangent lines to the member λ0.

    ``which`` is "ccw" (contact point counterclockwise of p as seen from the
    centre, integral s1 − s2) or "cw" (integral s1 + s2).
    """
    Q = ConicMember(fam, lam0)
    if which not in ("ccw", "cw"):
        raise ValueError("which must be 'ccw' or 'cw'")
    sign = -1.0 if which == "ccw" else 1.0
    s, ds = _s_parts(fam, lam0)

    def slope(x, y):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateWarning)
            pair = tangent_slopes((x, y), Q)
        return pair.m1 if which == "ccw" else pair.m2

    def u(x, y):
        s1, s2 = s(x, y)
        return s1 + sign * s2

    def grad(x, y):
        (ax, ay), (bx, by) = ds(x, y)
        return ax + sign * bx, ay + sign * by

    return Foliation(f"tangents_{which}", slope, u, grad,
                     _tangent_exterior(fam, lam0, margin))


def _confocal_exclude(fam, margin, unit_T=True):
    def exclude(x, y):
        return np.logical_not(admissible((x, y), fam, margin, unit_T))

    return exclude


def cartesian_web(fam: ConfocalFamily | None = None, box: Box = DEFAULT_BOX,
                  margin: float = DEFAULT_MARGIN, regularize: bool = True) -> Web:
    """Vertical lines, horizontal lines, confocal ellipses, confocal hyperbolas."""
    fam = fam or ConfocalFamily()
    kw = {} if regularize else {"integral": "raw"}
    fols = (x_lines(margin=margin, **kw), y_lines(margin=margin, **kw),
            ellipses(fam, margin=margin, **kw), hyperbolas(fam, margin=margin, **kw))
    return Web(fols, box, _confocal_exclude(fam, margin), "cartesian")


def bipolar_web(fam: ConfocalFamily | None = None, box: Box = DEFAULT_BOX,
                margin: float = DEFAULT_MARGIN, regularize: bool = True) -> Web:
    """Elliptic pencil, hyperbolic pencil, confocal ellipses, confocal hyperbolas."""
    fam = fam or ConfocalFamily()
    kw = {} if regularize else {"integral": "raw"}
    fols = (sigma_pencil(fam, margin=margin, **kw), tau_pencil(fam, margin=margin, **kw),
            ellipses(fam, margin=margin, **kw), hyperbolas(fam, margin=margin, **kw))
    return Web(fols, box, _confocal_exclude(fam, margin), "bipolar")


def tangent_web(fam: ConfocalFamily | None = None, lam0: float = 0.0,
                box: Box = DEFAULT_BOX, margin: float = DEFAULT_MARGIN) -> Web:
    """Both tangent families to the member λ0 plus the confocal net."""
    fam = fam or ConfocalFamily()
    ConicMember(fam, lam0)
    fols = (tangent_family(fam, lam0, "ccw", margin), tangent_family(fam, lam0, "cw", margin),
            parallel_ellipses(fam, lam0, margin), parallel_hyperbolas(fam, lam0, margin))
    return Web(fols, box, _confocal_exclude(fam, margin, unit_T=False),
               f"tangent(lambda0={lam0:g})")


def six_web(fam: ConfocalFamily | None = None, box: Box = DEFAULT_BOX,
            margin: float = DEFAULT_MARGIN, regularize: bool = True) -> Web:
    """Confocal net, Cartesian lines and both bipolar pencils."""
    fam = fam or ConfocalFamily()
    kw = {} if regularize else {"integral": "raw"}
    fols = (x_lines(margin=margin, **kw), y_lines(margin=margin, **kw),
            ellipses(fam, margin=margin, **kw), hyperbolas(fam, margin=margin, **kw),
            sigma_pencil(fam, margin=margin, **kw), tau_pencil(fam, margin=margin, **kw))
    return Web(fols, box, _confocal_exclude(fam, margin), "sixweb")


# ---------------------------------------------------------------------------
# reference webs


def _line_family(name, a, b):
    """Parallel lines a·x + b·y = const."""

    def slope(x, y):
        m = np.inf if b == 0 else -a / b
        return np.full(np.broadcast(x, y).shape, m)[()]

    def u(x, y):
        return a * x + b * y

    def grad(x, y):
        sh = np.broadcast(x, y).shape
        return np.full(sh, float(a))[()], np.full(sh, float(b))[()]

    return Foliation(name, slope, u, grad)


def parallel_web(box: Box = Box(-1.0, 1.0, -1.0, 1.0)) -> Web:
    """Three pencils of parallel lines (slopes 0, ∞, 1; integrals y, x, y − x)."""
    return Web((_line_family("y", 0, 1), _line_family("x", 1, 0),
                _line_family("y-x", -1, 1)), box, name="parallel")


def skew_web(box: Box = Box(0.25, 1.25, 0.25, 1.25)) -> Web:
    """A non-hexagonal 3-web: slopes 0, ∞ and x + 2y.

    The third foliation has first integral (y + x/2 + 1/4)·e^(−2x).
    """

    def u(x, y):
        return (y + 0.5 * x + 0.25) * np.exp(-2 * x)

    def grad(x, y):
        e = np.exp(-2 * x)
        return -(2 * y + x) * e, e + 0.0 * x

    def slope(x, y):
        return x + 2 * y

    third = Foliation("skew", slope, u, grad)
    return Web((_line_family("y", 0, 1), _line_family("x", 1, 0), third), box, name="skew")


FOLIATIONS = {
    "x_lines": lambda fam, m, reg: x_lines(margin=m, **({} if reg else {"integral": "raw"})),
    "y_lines": lambda fam, m, reg: y_lines(margin=m, **({} if reg else {"integral": "raw"})),
    "ellipses": lambda fam, m, reg: ellipses(fam, margin=m, **({} if reg else {"integral": "raw"})),
    "hyperbolas": lambda fam, m, reg: hyperbolas(fam, margin=m,
                                                 **({} if reg else {"integral": "raw"})),
    "sigma_pencil": lambda fam, m, reg: sigma_pencil(fam, margin=m,
                                                     **({} if reg else {"integral": "raw"})),
    "tau_pencil": lambda fam, m, reg: tau_pencil(fam, margin=m,
                                                 **({} if reg else {"integral": "raw"})),
}


def custom_web(names, fam: ConfocalFamily | None = None, box: Box = DEFAULT_BOX,
               margin: float = DEFAULT_MARGIN, regularize: bool = True) -> Web:
    """Web assembled from named foliations (keys of ``FOLIATIONS``)."""
    fam = fam or ConfocalFamily()
    try:
        fols = tuple(FOLIATIONS[n](fam, margin, regularize) for n in names)
    except KeyError as exc:
        raise DomainError(f"unknown foliation {exc.args[0]!r}") from None
    return Web(fols, box, _confocal_exclude(fam, margin), "custom")


def build_web(kind: str, fam: ConfocalFamily | None = None, box: Box = DEFAULT_BOX,
              margin: float = DEFAULT_MARGIN, lam0: float = 0.0, names=None) -> Web:
    """Web by kind name: cartesian, bipolar, tangent, sixweb or custom."""
    if kind == "cartesian":
        return cartesian_web(fam, box, margin)
    if kind == "bipolar":
        return bipolar_web(fam, box, margin)
    if kind == "tangent":
        return tangent_web(fam, lam0, box, margin)
    if kind == "sixweb":
        return six_web(fam, box, margin)
    if kind == "custom":
        return custom_web(names or (), fam, box, margin)
    raise DomainError(f"unknown web kind {kind!r}")


def cartesian_relations(fam: ConfocalFamily | None = None) -> dict:
    """Known Abelian relations of :func:`cartesian_web` as density tuples.

    Densities are with respect to the default integrals (ln x, ln y,
    ln(b2 − λ1), logit λ2).  ``x_factor`` and ``y_factor`` are the
    logarithmic derivatives of (a2−λ1)(a2−λ2) = c²x² and
    (b2−λ1)(b2−λ2) = −c²y²; ``trace`` is d(x² + y² + λ1 + λ2) = 0.
    """
    fam = fam or ConfocalFamily()
    c2 = fam.a2 - fam.b2

    def const(v):
        return lambda u: np.full_like(np.asarray(u, dtype=float), v)

    return {
        "x_factor": (const(2.0), const(0.0), lambda u: -np.exp(u) / (c2 + np.exp(u)),
                     lambda u: np.exp(u) / (1 + np.exp(u))),
        "y_factor": (const(0.0), const(2.0), const(-1.0), lambda u: -1 / (1 + np.exp(u))),
        "trace": (lambda u: 2 * np.exp(2 * u), lambda u: 2 * np.exp(2 * u),
                  lambda u: -np.exp(u), lambda u: c2 * np.exp(u) / (1 + np.exp(u)) ** 2),
    }
