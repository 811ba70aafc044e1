"""Acceptance criteria 1–9, one test each.

Every test records a one-line PASS/FAIL summary (printed in the terminal
summary and to stdout) before asserting.
"""

import time
from collections import Counter

import numpy as np
import pytest

from weblab.abelian_rank import CollocationConfig, extract_basis, projection_residual, \
    rank_estimate
from weblab.cli import main
from weblab.conic_geometry import ConfocalFamily, bisector_slopes, confocal_slope, \
    elliptic_coords, slope_angle_difference, tangent_slopes
from weblab.errors import WebLabError
from weblab.pde_verify import IdentityId, run_suite
from weblab.report import config_from_dict, run
from weblab.web_core import hexagon_defect, subwebs
from weblab.webs import bipolar_web, cartesian_relations, cartesian_web, six_web, tangent_web

FAM = ConfocalFamily(2.0, 1.0)
COLLOC = CollocationConfig(degree=8)


@pytest.fixture
def criterion(record_property):
    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
        print(line)
        record_property("criterion", line)
        assert ok, line
    return record


def test_criterion_1_pde_suite(criterion):
    t0 = time.perf_counter()
    res = run_suite(FAM, n=10, seed=0)
    elapsed = time.perf_counter() - t0
    per_id = Counter(r.identity for r in res.reports)
    order = min(r.order_estimate for r in res.reports)
    worst = max(r.residuals[-1] for r in res.reports)
    plateau = all(abs(c.order_estimate) < 0.5 and min(c.residuals) > 1e-4 for c in res.controls)
    ok = (set(per_id) == set(IdentityId) and min(per_id.values()) >= 10
          and order >= 1.9 and worst < 1e-5 and plateau and elapsed < 5)
    criterion(1, ok, f"min order {order:.3f}, max residual {worst:.2e}, "
                     f"{len(res.controls)} controls plateau={plateau}, {elapsed:.2f} s")


def test_criterion_2_cartesian_rank(criterion):
    t0 = time.perf_counter()
    rk = rank_estimate(cartesian_web(FAM), COLLOC)
    elapsed = time.perf_counter() - t0
    ok = (rk.detected_rank == 3 and rk.degrees_tested == [8, 16]
          and rk.gap_ratio >= 1e3 and elapsed < 30)
    criterion(2, ok, f"rank {rk.detected_rank}, gap {rk.gap_ratio:.3g}, "
                     f"next {rk.next_ratio:.3g}, {elapsed:.2f} s")


def test_criterion_3_bipolar_rank_and_hexagons(criterion):
    w = bipolar_web(FAM)
    rk = rank_estimate(w, COLLOC)
    sub_ranks, worst, counts = [], 0.0, []
    rng = np.random.default_rng(0)
    for sw in subwebs(w, 3):
        sub_ranks.append(rank_estimate(sw, COLLOC).detected_rank)
        b = sw.box
        defects = []
        while len(defects) < 20:
            p = (rng.uniform(b.xmin + 0.15, b.xmax - 0.15), rng.uniform(b.ymin + 0.15, b.ymax - 0.15))
            try:
                defects.append(hexagon_defect(sw, p, 0.05).defect)
            except WebLabError:
                continue
        counts.append(len(defects))
        worst = max(worst, max(defects))
    ok = rk.detected_rank == 3 and sub_ranks == [1] * 4 and worst < 1e-8 and min(counts) >= 20
    criterion(3, ok, f"rank {rk.detected_rank}, subweb ranks {sub_ranks}, "
                     f"max hexagon defect {worst:.2e} over {sum(counts)} centers")


def test_criterion_4_tangent_rank_and_bisectors(criterion):
    rk = rank_estimate(tangent_web(FAM, 0.0), COLLOC)
    Q = FAM.member(0.0)
    rng = np.random.default_rng(4)
    worst, n = 0.0, 0
    while n < 100:
        x, y = rng.uniform(-3, 3, 2)
        if min(abs(x), abs(y)) < 0.05 or Q.A * y * y + Q.B * x * x - Q.A * Q.B < 0.05:
            continue
        T = confocal_slope((x, y), FAM)
        for m in bisector_slopes(tangent_slopes((x, y), Q)):
            worst = max(worst, min(slope_angle_difference(m, k) for k in (-T, 1 / T)))
        n += 1
    ok = rk.detected_rank == 3 and worst < 1e-10
    criterion(4, ok, f"rank {rk.detected_rank}, gap {rk.gap_ratio:.3g}, "
                     f"max bisector angle {worst:.2e} at {n} exterior points")


def _quartic(kind, **web):
    rep = run("quartic", config_from_dict({"web": {"kind": kind, **web}}))
    assert not rep.errors, rep.errors
    return rep.results["quartic"]


def test_criterion_5_quartic_structure(criterion):
    a = _quartic("cartesian")
    ca = a["components"]
    inc = a["incidences"]
    ok_a = (a["pattern"] == "conic+2lines"
            and [c["kind"] for c in ca] == ["line", "line", "conic", "conic"]
            and max(c["residual"] for c in ca[:2]) < 1e-6
            and inc["common_conic_residual"] < 1e-8 and inc["common_conic_smooth"]
            and inc["line_intersection_on_conic"] < 1e-5)
    b = _quartic("bipolar")
    ok_b = (b["pattern"] == "4lines-general"
            and max(c["residual"] for c in b["components"]) < 1e-6
            and b["incidences"]["general_position_metric"] > 1e-3)
    c = _quartic("tangent", lambda0=0.0)
    ok_c = (c["pattern"] == "4lines-concurrent"
            and c["incidences"]["concurrency_metric"] < 1e-6
            and abs(c["incidences"]["cross_ratio"] + 1) < 1e-4)
    criterion(5, ok_a and ok_b and ok_c,
              f"(a) conic {inc['common_conic_residual']:.1e}, "
              f"incidence {inc['line_intersection_on_conic']:.1e}; "
              f"(b) general {b['incidences']['general_position_metric']:.3f}; "
              f"(c) concurrency {c['incidences']['concurrency_metric']:.1e}, "
              f"cross ratio {c['incidences']['cross_ratio']:.6f}")


def test_criterion_6_frobenius(criterion):
    worst_loop, worst_line, n_loops, ok = 0.0, 0.0, [], True
    for kind in ("cartesian", "bipolar"):
        rep = run("frobenius", config_from_dict({"web": {"kind": kind}}))
        ok &= not rep.errors
        fb = rep.results.get("frobenius", {"loops": [], "displayed_incidence": {"-": 1.0}})
        loops = fb["loops"]
        ok &= len(loops) >= 5 and all(lp["perimeter"] <= 1 for lp in loops)
        n_loops.append(len(loops))
        worst_loop = max([worst_loop] + [lp["defect"] for lp in loops])
        worst_line = max([worst_line] + list(fb["displayed_incidence"].values()))
    ok &= worst_loop < 1e-7 and worst_line < 1e-8
    criterion(6, ok, f"loops {n_loops}, max loop defect {worst_loop:.2e}, "
                     f"max line incidence {worst_line:.2e}")


def test_criterion_7_factorization(criterion):
    rng = np.random.default_rng(7)
    a2, b2 = FAM.a2, FAM.b2
    c2 = a2 - b2
    vieta = 0.0
    for x, y in rng.uniform(0.1, 3.0, (200, 2)):
        l1, l2 = elliptic_coords((x, y), FAM)
        s = 1 + x * x + y * y
        vieta = max(vieta,
                    abs(l1 + l2 + x * x + y * y - a2 - b2) / s,
                    abs(l1 * l2 - (a2 * b2 - b2 * x * x - a2 * y * y)) / s ** 2,
                    abs((a2 - l1) * (a2 - l2) - c2 * x * x) / s ** 2,
                    abs((b2 - l1) * (b2 - l2) + c2 * y * y) / s ** 2)
    w = cartesian_web(FAM)
    basis = extract_basis(w, COLLOC)
    proj = {k: projection_residual(basis, v) for k, v in cartesian_relations(FAM).items()}
    ok = vieta < 1e-12 and max(proj.values()) < 1e-6
    criterion(7, ok, f"Vieta {vieta:.1e}, projection "
                     + ", ".join(f"{k} {v:.1e}" for k, v in sorted(proj.items())))


def test_criterion_8_six_web(criterion):
    rk = rank_estimate(six_web(FAM), COLLOC)
    ok = rk.detected_rank < 10 and rk.bol_bound == 10
    criterion(8, ok, f"rank {rk.detected_rank} of Bol bound {rk.bol_bound}")


def test_criterion_9_determinism(criterion, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        code = main(["all", "--seed", "0", "--out", str(out)])
        outs.append((code, out.read_bytes()))
    ok = outs[0] == outs[1] and outs[0][0] == 0
    criterion(9, ok, f"exit codes {outs[0][0]}/{outs[1][0]}, "
                     f"{len(outs[0][1])} bytes, identical={outs[0][1] == outs[1][1]}")

