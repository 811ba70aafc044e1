import math

import numpy as np
import pytest

from weblab.abelian_rank import (CollocationConfig, collocation_matrix, extract_basis,
                                 lie_arcs, projection_residual, rank_estimate)
from weblab.conic_geometry import ConfocalFamily
from weblab.errors import ConfigError, RankError
from weblab.rank_quartic import classify, fit_component
from weblab.web_core import subwebs
from weblab.webs import (bipolar_web, cartesian_relations, cartesian_web, parallel_web,
                         six_web, tangent_web)

FAM = ConfocalFamily()
CFG = CollocationConfig()


@pytest.fixture(scope="module")
def cart_basis():
    return extract_basis(cartesian_web(), CFG)


def test_config_validation():
    for kw in ({"degree": 0}, {"basis": "hermite"}, {"gap_threshold": 1.0},
               {"reparam": "exp"}, {"samples": 0}, {"degree": 2.5}):
        with pytest.raises(ConfigError):
            CollocationConfig(**kw)
    with pytest.raises(ConfigError):
        CollocationConfig(samples=100).n_samples(4)
    assert CFG.n_samples(4) == 8 * 17 * 4


def test_rank_two_webs_zero():
    for w in subwebs(cartesian_web(), 2) + subwebs(bipolar_web(), 2)[:2]:
        assert rank_estimate(w, CFG).detected_rank == 0


@pytest.mark.parametrize("builder", [cartesian_web, bipolar_web, tangent_web])
def test_maximal_rank_four_webs(builder):
    r = rank_estimate(builder(), CFG)
    assert r.detected_rank == 3
    assert r.gap_ratio >= 1e3
    assert r.degrees_tested == [8, 16]
    sv = np.array(r.singular_values)
    assert np.all(sv >= 0) and np.all(np.diff(sv) <= 0)
    assert r.next_ratio < 1e3


def test_bipolar_subwebs_rank_one():
    for w in subwebs(bipolar_web(), 3):
        assert rank_estimate(w, CFG).detected_rank == 1, w.name


def test_cartesian_subwebs():
    ranks = [rank_estimate(w, CFG).detected_rank for w in subwebs(cartesian_web(), 3)]
    # only the two subwebs containing both conic families are hexagonal
    assert ranks == [0, 0, 1, 1]


@pytest.mark.parametrize("builder", [cartesian_web, bipolar_web, tangent_web])
def test_rank_invariant_under_reparametrization(builder):
    w = builder()
    cubic = CollocationConfig(reparam="cubic")
    assert rank_estimate(w, cubic).detected_rank == rank_estimate(w, CFG).detected_rank
    sub = subwebs(w, 3)[-1]
    assert rank_estimate(sub, cubic).detected_rank == rank_estimate(sub, CFG).detected_rank


def test_chebyshev_basis_agrees():
    cfg = CollocationConfig(basis="chebyshev")
    assert rank_estimate(cartesian_web(), cfg).detected_rank == 3


def test_six_web_below_bol_bound():
    r = rank_estimate(six_web(), CFG)
    assert r.bol_bound == 10
    assert r.detected_rank < 10


def test_seeds_agree():
    for seed in (1, 2):
        assert rank_estimate(cartesian_web(), CollocationConfig(seed=seed)).detected_rank == 3


def test_collocation_rows_normalized():
    w = cartesian_web()
    x, y = w.sample_points(50)
    ranges = np.array([[float(f.u((x, y)).min()), float(f.u((x, y)).max())]
                       for f in w.foliations])
    A = collocation_matrix(w, x, y, 4, ranges)
    assert A.shape == (100, 20)
    assert np.allclose(np.max(np.abs(A), axis=1), 1.0)


@pytest.mark.parametrize("builder", [cartesian_web, bipolar_web, tangent_web])
def test_holdout_residuals_track_singular_values(builder):
    b = extract_basis(builder(), CFG)
    assert b.rank == 3
    assert np.all(b.holdout_residuals < 100 * np.maximum(b.singular_values, 1e-15))


def test_factorization_relations_in_span(cart_basis):
    for name, dens in cartesian_relations(FAM).items():
        assert projection_residual(cart_basis, dens) < 1e-6, name
    bad = (lambda u: np.ones_like(u),) + (lambda u: np.zeros_like(u),) * 3
    assert projection_residual(cart_basis, bad) > 0.1


def test_parallel_web_constant_densities():
    w = parallel_web()
    b = extract_basis(w, CFG)
    assert b.rank == 1
    vals = []
    for i, f in enumerate(w.foliations):
        lo, hi = b.ranges[i]
        g = b.density(i, np.linspace(lo, hi, 9))[0]
        assert np.ptp(g) < 1e-10 * np.max(np.abs(g))
        vals.append(g[0])
    # u1 = y, u2 = x, u3 = y − x: du1 − du2 − du3 = 0
    v = np.array(vals) / vals[0]
    assert v == pytest.approx([1.0, -1.0, -1.0], abs=1e-10)


def test_hexagonal_subweb_unique_relation():
    w = subwebs(bipolar_web(), 3)[0]
    b = extract_basis(w, CFG)
    assert b.coefficients.shape[0] == 1


def test_extract_basis_requires_relation():
    with pytest.raises(RankError):
        extract_basis(subwebs(cartesian_web(), 2)[0], CFG)


def test_lie_arcs_constant_along_leaves(cart_basis):
    w = cartesian_web()
    lam = -0.8
    t = np.linspace(0.5, 0.9, 6)
    x = math.sqrt(FAM.a2 - lam) * np.cos(t)
    y = math.sqrt(FAM.b2 - lam) * np.sin(t)
    arcs = lie_arcs(cart_basis, w, (x, y))
    ell = arcs[2]
    assert np.max(np.abs(ell - ell[0])) < 1e-5
    assert np.max(np.abs(arcs[0] - arcs[0][0])) > 1e-3


def test_lie_arcs_shapes(cart_basis):
    w = cartesian_web()
    arcs = lie_arcs(cart_basis, w, w.sample_points(20, 4))
    assert fit_component(arcs[0], "line").residual < 1e-6
    assert fit_component(arcs[1], "line").residual < 1e-6
    assert classify(arcs).pattern == "conic+2lines"
    wb = bipolar_web()
    bb = extract_basis(wb, CFG)
    arcs = lie_arcs(bb, wb, wb.sample_points(20, 4))
    assert all(fit_component(a, "line").residual < 1e-6 for a in arcs)
    assert classify(arcs).pattern == "4lines-general"
    with pytest.raises(RankError):
        lie_arcs(extract_basis(subwebs(wb, 3)[0], CFG), wb, (np.ones(2), np.ones(2)))
