"""Numerical rank of planar webs by collocation of Abelian relations.

An Abelian relation is sought in derivative form: densities g_i with

    Σ_i g_i(u_i(p)) ∇u_i(p) = 0        for all p,

so every term g_i(u_i) du_i is automatically closed.  Each g_i is expanded in
an orthogonal polynomial basis of the affinely rescaled integral
t_i ∈ [−1, 1], and the identity is imposed at random admissible points.
A relation shows up as a trailing singular value that keeps shrinking when
the degree is doubled (spectral convergence of an analytic density), while
non-relations level off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev, legendre

from .errors import ConfigError, RankError
from .web_core import Web

_VANDER = {"legendre": legendre.legvander, "chebyshev": chebyshev.chebvander}


@dataclass(frozen=True)
class CollocationConfig:
    """Collocation settings.

    ``samples`` defaults to 8·(2·degree + 1)·d points, which keeps the doubled
    degree overdetermined by a factor of 8 (two equations per point).
    ``floor`` is the relative level below which a singular value counts as
    exactly zero.  ``reparam="cubic"`` replaces each integral u by w³ + w with
    w the affine image of u on [2, 3] (a monotone change of variables used to
    test invariance of the count).
    """

    degree: int = 8
    samples: int | None = None
    basis: str = "legendre"
    gap_threshold: float = 1e3
    floor: float = 1e-11
    seed: int = 0
    reparam: str | None = None

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ConfigError("degree must be an integer ≥ 1")
        if self.basis not in _VANDER:
            raise ConfigError(f"unknown basis {self.basis!r}")
        if not self.gap_threshold > 1:
            raise ConfigError("gap_threshold must exceed 1")
        if self.reparam not in (None, "cubic"):
            raise ConfigError(f"unknown reparametrization {self.reparam!r}")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be positive")

    def n_samples(self, d: int) -> int:
        n = self.samples if self.samples is not None else 8 * (2 * self.degree + 1) * d
        if n < 4 * (2 * self.degree + 1) * d:
            raise ConfigError(
                f"samples={n} below 4·(degree+1)·d at the doubled degree")
        return n


@dataclass(frozen=True)
class RankReport:
    singular_values: list        # at the doubled degree, normalized, descending
    singular_values_low: list    # at the base degree
    detected_rank: int
    gap_ratio: float             # weakest shrink factor among detected relations
    next_ratio: float            # shrink factor of the first rejected candidate
    shrink_factors: list         # trailing candidates, smallest singular value first
    degrees_tested: list
    bol_bound: int


@dataclass(frozen=True)
class AbelianBasisNumeric:
    """Densities of the detected relations.

    ``coefficients[a, i]`` are the basis coefficients of g_i^a in the
    rescaled variable; :meth:`density` returns values with respect to du_i.
    """

    coefficients: np.ndarray
    ranges: np.ndarray
    degree: int
    basis: str
    reparam: str | None
    singular_values: np.ndarray
    holdout_residuals: np.ndarray = field(default=None)

    @property
    def rank(self) -> int:
        return self.coefficients.shape[0]

    def density(self, i: int, u) -> np.ndarray:
        """Values g_i^a(u) for every relation a, shape (rank, len(u))."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        t, dt = _rescale(u, self.ranges[i], self.reparam)
        V = _VANDER[self.basis](t, self.degree)
        return (V @ self.coefficients[:, i, :].T).T * dt


def _rescale(u, rng, reparam):
    """Rescaled variable t ∈ [−1, 1] and dt/du."""
    lo, hi = rng
    if reparam == "cubic":
        w = 2.0 + (u - lo) / (hi - lo)
        v = w ** 3 + w
        dv = (3 * w * w + 1) / (hi - lo)
        return (2 * v - 40.0) / 20.0, dv / 10.0
    return (2 * u - lo - hi) / (hi - lo), np.full_like(u, 2.0 / (hi - lo))


def _integral_ranges(w: Web, x, y):
    out = []
    for f in w.foliations:
        u = np.asarray(f.u((x, y)), dtype=float)
        lo, hi = float(u.min()), float(u.max())
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi - lo <= 1e-12 * max(1.0, abs(hi)):
            raise RankError(f"degenerate first-integral range for {f.name}")
        out.append((lo, hi))
    return np.array(out)


def collocation_matrix(w: Web, x, y, degree: int, ranges, basis="legendre", reparam=None):
    """Rows Σ_i g_i(u_i) ∂u_i = 0 (x- then y-equations), each row scaled to max 1."""
    vander = _VANDER[basis]
    cols = []
    for f, rng in zip(w.foliations, ranges):
        u = np.asarray(f.u((x, y)), dtype=float)
        gx, gy = f.grad((x, y))
        t, dt = _rescale(u, rng, reparam)
        V = vander(t, degree)
        cols.append(np.vstack([V * (gx * dt)[:, None], V * (gy * dt)[:, None]]))
    A = np.hstack(cols)
    scale = np.max(np.abs(A), axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    return A / scale


def _spectrum(A):
    s = np.linalg.svd(A, compute_uv=False)
    return s / s[0]


def rank_estimate(w: Web, cfg: CollocationConfig = CollocationConfig()) -> RankReport:
    """Count Abelian relations by the degree-doubling criterion.

    Trailing singular values are compared at ``degree`` and ``2·degree`` on
    the same sample; the k-th smallest counts as a relation when it shrinks
    by at least ``gap_threshold`` or is already at the numerical ``floor``.
    Counting stops at the first candidate that fails.
    """
    d = len(w)
    x, y = w.sample_points(cfg.n_samples(d), cfg.seed)
    ranges = _integral_ranges(w, x, y)
    lo = _spectrum(collocation_matrix(w, x, y, cfg.degree, ranges, cfg.basis, cfg.reparam))
    hi = _spectrum(collocation_matrix(w, x, y, 2 * cfg.degree, ranges, cfg.basis,
                                      cfg.reparam))
    bol = w.bol_bound
    shrink = []
    count = 0
    counting = True
    for k in range(1, min(bol + 2, len(lo)) + 1):
        s_lo, s_hi = lo[-k], hi[-k]
        ratio = float(s_lo / s_hi) if s_hi > 0 else float("inf")
        shrink.append(ratio)
        if counting and (s_hi <= cfg.floor or ratio >= cfg.gap_threshold):
            count += 1
        else:
            counting = False
    if count > bol:
        raise RankError(f"detected {count} relations, above the Bol bound {bol}: "
                        "sampling is degenerate")
    # relations already at the floor are exact; their shrink factor is moot
    gaps = [float("inf") if hi[-k] <= cfg.floor else shrink[k - 1]
            for k in range(1, count + 1)]
    gap = float(min(gaps)) if count else float("nan")
    nxt = float(shrink[count]) if count < len(shrink) else float("nan")
    return RankReport(
        singular_values=[float(v) for v in hi],
        singular_values_low=[float(v) for v in lo],
        detected_rank=count,
        gap_ratio=gap,
        next_ratio=nxt,
        shrink_factors=shrink,
        degrees_tested=[cfg.degree, 2 * cfg.degree],
        bol_bound=bol,
    )


def extract_basis(w: Web, cfg: CollocationConfig = CollocationConfig(),
                  report: RankReport | None = None, holdout: int = 200) -> AbelianBasisNumeric:
    """Densities of the detected relations at the doubled degree.

    The trailing right-singular vectors of the collocation matrix are split
    into per-foliation coefficient blocks.  Each relation is re-evaluated at
    ``holdout`` fresh points; the reported residual is the norm of the
    held-out rows scaled to the training row count, directly comparable with
    the singular value.
    """
    report = report or rank_estimate(w, cfg)
    r = report.detected_rank
    if r < 1:
        raise RankError("no Abelian relation detected")
    d = len(w)
    deg = 2 * cfg.degree
    x, y = w.sample_points(cfg.n_samples(d), cfg.seed)
    ranges = _integral_ranges(w, x, y)
    A = collocation_matrix(w, x, y, deg, ranges, cfg.basis, cfg.reparam)
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    V = vt[-r:][::-1]
    sv = (s / s[0])[-r:][::-1]
    xh, yh = w.sample_points(holdout, cfg.seed + 7919)
    Ah = collocation_matrix(w, xh, yh, deg, ranges, cfg.basis, cfg.reparam)
    scale = np.sqrt(A.shape[0] / Ah.shape[0]) / s[0]
    res = np.linalg.norm(Ah @ V.T, axis=0) * scale
    return AbelianBasisNumeric(
        coefficients=V.reshape(r, d, deg + 1),
        ranges=ranges,
        degree=deg,
        basis=cfg.basis,
        reparam=cfg.reparam,
        singular_values=sv,
        holdout_residuals=res,
    )


def projection_residual(basis: AbelianBasisNumeric, densities, n: int = 64) -> float:
    """Relative distance of a known relation from the span of ``basis``.

    ``densities`` holds one callable g_i(u) per foliation (with respect to
    du_i).  All foliations are sampled on Chebyshev grids of their integral
    ranges and fitted jointly, since a relation uses one coefficient vector
    for every foliation.
    """
    rows, target = [], []
    for i, g in enumerate(densities):
        lo, hi = basis.ranges[i]
        u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * (np.arange(n) + 0.5) / n)
        rows.append(basis.density(i, u))
        target.append(np.broadcast_to(np.asarray(g(u), dtype=float), u.shape))
    B = np.hstack(rows).T
    t = np.concatenate(target)
    coef, *_ = np.linalg.lstsq(B, t, rcond=None)
    return float(np.linalg.norm(B @ coef - t) / np.linalg.norm(t))


def lie_arcs(basis: AbelianBasisNumeric, w: Web, samples) -> list:
    """Lie's construction: per foliation, the projective points [g_i^1:g_i^2:g_i^3].

    Returns one (n, 3) array per foliation, rows of unit norm with the first
    significant coordinate positive.
    """
    if basis.rank != 3:
        raise RankError(f"Lie arcs need a rank-3 basis, got rank {basis.rank}")
    x, y = samples
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    from .rank_quartic import normalize

    out = []
    for i, f in enumerate(w.foliations):
        g = basis.density(i, f.u((x, y)))
        out.append(normalize(g.T))
    return out
