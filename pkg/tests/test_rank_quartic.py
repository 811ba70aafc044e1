import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from weblab.abelian_rank import CollocationConfig, extract_basis, lie_arcs
from weblab.conic_geometry import ConfocalFamily, elliptic_coords, parallel_integrals
from weblab.errors import FitError, SingularPointError
from weblab.frobenius import SystemKind, transported_arcs
from weblab.rank_quartic import (classify, concurrency_metric, conic_matrix, cross_ratio,
                                 fit_component, general_position_metric, harmonic_conjugate,
                                 line_intersection, normalize, pencil_cross_ratio)
from weblab.webs import tangent_family, tangent_web

FAM = ConfocalFamily()
GRID = [(x, y) for x in np.linspace(0.7, 2.1, 4) for y in np.linspace(0.7, 1.7, 4)]


@pytest.fixture(scope="module")
def cart_arcs():
    return transported_arcs(SystemKind.CARTESIAN, FAM, (1.4, 1.2), GRID)[0]


@pytest.fixture(scope="module")
def bip_arcs():
    return transported_arcs(SystemKind.BIPOLAR, FAM, (1.4, 1.2), GRID)[0]


@pytest.fixture(scope="module")
def tan_arcs():
    w = tangent_web()
    return lie_arcs(extract_basis(w, CollocationConfig()), w, w.sample_points(20, 1))


def test_normalize():
    P = normalize([[0, -2, 0], [-3, 4, 0]])
    assert np.allclose(P, [[0, 1, 0], [0.6, -0.8, 0]])
    with pytest.raises(SingularPointError):
        normalize([0, 0, 0])


def test_line_fit_example():
    c = fit_component([[1, t, 0] for t in (0, 1, 2)], "line")
    assert np.allclose(np.abs(c.coefficients), [0, 0, 1])
    assert c.residual < 1e-15


def test_parabola_fit_example():
    c = fit_component([[t, t * t, 1] for t in np.linspace(-2, 2, 9)], "conic")
    # Y·Z − X²: coefficients (X², XY, Y², XZ, YZ, Z²) ∝ (−1, 0, 0, 0, 1, 0)
    ref = np.array([-1, 0, 0, 0, 1, 0]) / math.sqrt(2)
    assert min(np.linalg.norm(c.coefficients - ref), np.linalg.norm(c.coefficients + ref)) < 1e-12
    assert c.smooth and c.residual < 1e-14


def test_fit_errors():
    with pytest.raises(FitError):
        fit_component([[1, 0, 0], [0, 1, 0]], "line")
    with pytest.raises(FitError):
        fit_component([[1, 1, 1]] * 5, "line")
    with pytest.raises(FitError):
        fit_component([[1, t, 0] for t in range(8)], "conic")
    with pytest.raises(FitError):
        fit_component([[1, 0, 0]] * 3, "cubic")


def test_degenerate_conic_flagged():
    pts = [[t, 0, 1] for t in range(4)] + [[0, t, 1] for t in range(1, 4)]
    c = fit_component(pts, "conic")
    assert not c.smooth


def test_line_intersection_and_metrics():
    X = line_intersection([1, 0, -1], [0, 1, -2])
    assert np.allclose(X / X[2], [1, 2, 1])
    with pytest.raises(SingularPointError):
        line_intersection([1, 0, 0], [2, 0, 0])
    pencil = [[1, 0, -1], [0, 1, -2], [1, 1, -3], [1, -1, 1]]
    assert concurrency_metric(pencil) < 1e-15
    assert general_position_metric([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]) > 0.1


def test_cross_ratio_examples():
    assert cross_ratio(0, math.inf, 1, -1) == pytest.approx(-1)
    m = harmonic_conjugate(1, 3, 2)
    assert math.isinf(m)
    m = harmonic_conjugate(1, 3, 1.5)
    assert cross_ratio(1, 3, 1.5, m) == pytest.approx(-1, abs=1e-14)
    with pytest.raises(SingularPointError):
        cross_ratio(1, 2, 1, 3)
    with pytest.raises(SingularPointError):
        harmonic_conjugate(1, 1, 2)


slopes = st.lists(st.floats(-5, 5), min_size=4, max_size=4, unique=True)


@given(slopes, st.tuples(*[st.floats(-2, 2)] * 4))
def test_cross_ratio_moebius_invariance(ms, abcd):
    a, b, c, d = abcd
    assume(abs(a * d - b * c) > 0.1)
    assume(min(abs(u - v) for i, u in enumerate(ms) for v in ms[i + 1:]) > 1e-2)
    vals = [c * m + d for m in ms]
    assume(min(abs(v) for v in vals) > 1e-3)
    img = [(a * m + b) / v for m, v in zip(ms, vals)]
    assume(min(abs(u - v) for i, u in enumerate(img) for v in img[i + 1:]) > 1e-3)
    assert cross_ratio(*img) == pytest.approx(cross_ratio(*ms), rel=1e-7, abs=1e-7)


def test_classify_web_patterns(cart_arcs, bip_arcs, tan_arcs):
    q = classify(cart_arcs)
    assert q.pattern == "conic+2lines"
    assert [c.kind for c in q.components] == ["line", "line", "conic", "conic"]
    assert q.incidences["common_conic_residual"] < 1e-8
    assert q.incidences["line_intersection_on_conic"] < 1e-5
    q = classify(bip_arcs)
    assert q.pattern == "4lines-general"
    assert q.incidences["general_position_metric"] > 1e-3
    q = classify(tan_arcs)
    assert q.pattern == "4lines-concurrent"
    assert q.incidences["cross_ratio"] == pytest.approx(-1, abs=1e-4)
    assert q.incidences["harmonic"]


def test_frame_conic_arcs_share_one_conic(cart_arcs):
    c = fit_component(np.vstack(cart_arcs[2:]), "conic")
    assert c.residual < 1e-8 and c.smooth
    assert abs(np.linalg.det(conic_matrix(c.coefficients))) > 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_classify_invariant_under_basis_change(seed, cart_arcs, bip_arcs, tan_arcs):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(3, 3))
    while abs(np.linalg.det(G)) < 0.3 or np.linalg.cond(G) > 20:
        G = rng.normal(size=(3, 3))
    for arcs in (cart_arcs, bip_arcs, tan_arcs):
        ref = classify(arcs)
        q = classify([normalize(a @ G.T) for a in arcs])
        assert q.pattern == ref.pattern
        assert [c.kind for c in q.components] == [c.kind for c in ref.components]
        if "harmonic" in ref.incidences:
            assert q.incidences["harmonic"] == ref.incidences["harmonic"]


def test_classify_rejects_bad_input():
    with pytest.raises(FitError):
        classify([np.eye(3)] * 3)
    rng = np.random.default_rng(0)
    with pytest.raises(FitError):
        classify([rng.normal(size=(12, 3)) for _ in range(4)])


def test_pencil_cross_ratio_harmonic():
    lines = [[1, 0, 0], [0, 1, 0], [1, 1, 0], [1, -1, 0]]
    assert pencil_cross_ratio(lines) == pytest.approx(-1)


def test_parallelized_tangent_web_is_harmonic():
    # in the (s1, s2) plane the four foliations become parallel lines of
    # slopes 1, −1, ∞, 0, whose ideal points form a harmonic quadruple
    p = (1.9, 1.4)
    l1, l2 = elliptic_coords(p, FAM)
    s1, s2 = parallel_integrals(l1, l2, FAM, 0.0)
    ccw, cw = tangent_family(FAM, 0.0, "ccw"), tangent_family(FAM, 0.0, "cw")
    assert ccw.u(p) == pytest.approx(s1 - s2, abs=1e-12)
    assert cw.u(p) == pytest.approx(s1 + s2, abs=1e-12)
    assert cross_ratio(1.0, -1.0, math.inf, 0.0) == pytest.approx(-1)
