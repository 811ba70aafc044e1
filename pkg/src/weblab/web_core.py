"""Foliations, webs, leaf-following and the hexagonal closure test."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .conic_geometry import Point, slope_direction, slope_from_direction
from .errors import DomainError, FlowError

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _never(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)


@dataclass(frozen=True)
class Foliation:
    """A foliation given by a slope field and an exact first integral.

    All callables take coordinate arrays ``(x, y)`` and broadcast.
    ``slope`` returns extended-real slopes (``inf`` for vertical leaves),
    ``gradient`` returns the pair (∂u/∂x, ∂u/∂y) and ``singular`` a mask of
    points where the foliation is not regular.
    """

    name: str
    slope: Callable
    first_integral: ScalarField
    gradient: Callable
    singular: Callable = _never

    def u(self, p):
        return self.first_integral(*_arr(p))

    def grad(self, p):
        gx, gy = self.gradient(*_arr(p))
        return np.asarray(gx, dtype=float), np.asarray(gy, dtype=float)

    def m(self, p):
        return self.slope(*_arr(p))


def _arr(p):
    x, y = p
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def gradient_slope(gradient: Callable) -> Callable:
    """Slope field of the level sets of a function with the given gradient."""

    def slope(x, y):
        gx, gy = gradient(x, y)
        return slope_from_direction(-np.asarray(gy), np.asarray(gx))

    return slope


def reparametrize(f: Foliation, phi: Callable, dphi: Callable, name: str | None = None):
    """Same foliation with first integral φ(u) (φ smooth and monotone)."""

    def u(x, y):
        return phi(f.first_integral(x, y))

    def grad(x, y):
        d = dphi(f.first_integral(x, y))
        gx, gy = f.gradient(x, y)
        return d * gx, d * gy

    return replace(f, name=name or f.name, first_integral=u, gradient=grad)


@dataclass(frozen=True)
class Box:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("box bounds must be finite")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise DomainError(f"empty box {vals}")

    def contains(self, x, y):
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)


@dataclass(frozen=True)
class Web:
    """An ordered list of 2–6 foliations on a rectangular box.

    ``exclude`` masks further inadmissible points (singular sets shared by
    the whole web, such as the band where two leaf directions meet).
    """

    foliations: tuple
    box: Box
    exclude: Callable = _never
    name: str = "web"

    def __post_init__(self):
        object.__setattr__(self, "foliations", tuple(self.foliations))
        if not 2 <= len(self.foliations) <= 6:
            raise DomainError("a web needs between 2 and 6 foliations")

    def __len__(self):
        return len(self.foliations)

    @property
    def bol_bound(self) -> int:
        d = len(self.foliations)
        return (d - 1) * (d - 2) // 2

    def regular(self, p):
        """Inside the box and off every foliation's singular set."""
        x, y = _arr(p)
        ok = self.box.contains(x, y)
        for f in self.foliations:
            ok &= ~np.asarray(f.singular(x, y), dtype=bool)
        return ok

    def admissible(self, p):
        """Regular and not removed by the web's sampling exclusion."""
        x, y = _arr(p)
        return self.regular((x, y)) & ~np.asarray(self.exclude(x, y), dtype=bool)

    def sample_points(self, n: int, seed: int = 0, max_draws: int = 50):
        """``n`` admissible points drawn uniformly from the box (rejection)."""
        rng = np.random.default_rng(seed)
        xs, ys, got = [], [], 0
        for _ in range(max_draws):
            m = max(2 * (n - got), 64)
            x = rng.uniform(self.box.xmin, self.box.xmax, m)
            y = rng.uniform(self.box.ymin, self.box.ymax, m)
            ok = self.admissible((x, y))
            xs.append(x[ok])
            ys.append(y[ok])
            got += int(ok.sum())
            if got >= n:
                break
        if got < n:
            raise DomainError("admissible part of the box is (nearly) empty")
        return np.concatenate(xs)[:n], np.concatenate(ys)[:n]

    def min_angle(self, p):
        """Smallest angle between leaf directions of distinct foliations."""
        dirs = [slope_direction(f.m(p)) for f in self.foliations]
        best = None
        for (ux, uy), (vx, vy) in itertools.combinations(dirs, 2):
            ang = np.arctan2(np.abs(ux * vy - uy * vx), np.abs(ux * vx + uy * vy))
            best = ang if best is None else np.minimum(best, ang)
        return best


def subwebs(w: Web, k: int) -> list[Web]:
    """All k-element subwebs in lexicographic order of foliation indices."""
    if not 2 <= k <= len(w):
        raise DomainError(f"subweb size {k} not in [2, {len(w)}]")
    out = []
    for idx in itertools.combinations(range(len(w)), k):
        fols = tuple(w.foliations[i] for i in idx)
        name = "{" + ",".join(f.name for f in fols) + "}"
        out.append(Web(fols, w.box, w.exclude, name))
    return out


# ---------------------------------------------------------------------------
# leaf-following


def _leaf_direction(f: Foliation, x: float, y: float):
    vx, vy = slope_direction(f.slope(np.asarray(x), np.asarray(y)))
    return float(vx), float(vy)


def flow(f: Foliation, p, g: Foliation, target: float, *, rtol: float = 1e-10,
         atol: float = 1e-10, max_steps: int = 100_000, domain: Callable | None = None):
    """Follow the leaf of ``f`` through ``p`` until ``g`` reaches ``target``.

    The leaf is parametrized by the transversal integral itself,
    dp/ds = v/(∇g·v) with v the unit leaf direction of ``f``, so the stop
    condition is the end of the integration interval.  Integration is the
    adaptive Dormand–Prince 4(5) pair of :func:`scipy.integrate.solve_ivp`.
    """
    x0, y0 = float(p[0]), float(p[1])
    s0 = float(g.u((x0, y0)))
    if s0 == target:
        return Point(x0, y0)
    calls = [0]

    def rhs(s, q):
        calls[0] += 1
        if calls[0] > 6 * max_steps:
            raise FlowError("step limit exceeded while following a leaf")
        vx, vy = _leaf_direction(f, q[0], q[1])
        gx, gy = g.grad((q[0], q[1]))
        dot = float(gx) * vx + float(gy) * vy
        norm = math.hypot(float(gx), float(gy))
        if not math.isfinite(dot) or abs(dot) <= 1e-12 * max(norm, 1e-300):
            raise FlowError(f"leaf of {f.name} tangent to {g.name} at {tuple(q)}")
        return [vx / dot, vy / dot]

    try:
        sol = solve_ivp(rhs, (s0, float(target)), [x0, y0], method="RK45",
                        rtol=rtol, atol=atol)
    except (FloatingPointError, ValueError) as exc:
        raise FlowError(f"integration failed: {exc}") from exc
    if sol.status != 0:
        raise FlowError(f"integration failed: {sol.message}")
    if domain is not None and not np.all(domain((sol.y[0], sol.y[1]))):
        raise FlowError(f"leaf of {f.name} leaves the domain")
    return Point(float(sol.y[0, -1]), float(sol.y[1, -1]))


class HexagonDefect(NamedTuple):
    epsilon: float
    defect: float
    order_estimate: float


def _hexagon_gap(w: Web, center, eps, **kw):
    f1, f2, f3 = w.foliations
    c = [float(f.u(center)) for f in (f1, f2, f3)]
    gx, gy = f2.grad(center)
    start = flow(f1, center, f2, c[1] + eps * math.hypot(gx, gy), **kw)
    q = start
    # travel along 2, 1, 3 twice, each time stopping on the fixed leaf of the
    # foliation that is neither the one just used nor the one being used
    for i, j in ((1, 2), (0, 1), (2, 0), (1, 2), (0, 1), (2, 0)):
        q = flow(w.foliations[i], q, w.foliations[j], c[j], **kw)
    return math.hypot(q.x - start.x, q.y - start.y)


def hexagon_defect(w: Web, center, eps: float, *, estimate_order: bool = False,
                   rtol: float = 1e-10, atol: float = 1e-10,
                   check_domain: bool = True) -> HexagonDefect:
    """Closure gap of the hexagonal figure of a 3-web around ``center``.

    The start point lies on the leaf of foliation 1 through the center, at
    signed distance ≈ ``eps`` (measured through foliation 2).  Six moves
    follow foliations 2, 1, 3, 2, 1, 3, each stopping on the fixed leaf
    through the center of foliation 3, 2, 1, 3, 2, 1 in turn.  The last
    point lies on the leaf of foliation 1 again and the defect is its
    distance from the start.

    With ``estimate_order`` the figure is also built at eps/2 and the order
    log2(defect(eps)/defect(eps/2)) is reported (NaN when both are at
    round-off level).
    """
    if len(w) != 3:
        raise DomainError("hexagon test needs a 3-web")
    cx, cy = float(center[0]), float(center[1])
    if not bool(w.admissible((cx, cy))):
        raise DomainError(f"center {cx, cy} not admissible")
    kw = dict(rtol=rtol, atol=atol, domain=w.regular if check_domain else None)
    d = _hexagon_gap(w, (cx, cy), eps, **kw)
    order = math.nan
    if estimate_order:
        d2 = _hexagon_gap(w, (cx, cy), eps / 2, **kw)
        if d > 1e-12 and d2 > 1e-13:
            order = math.log2(d / d2)
    return HexagonDefect(float(eps), float(d), order)
