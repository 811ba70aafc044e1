"""Experiment configuration, suite runners and machine-readable reports."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import frobenius as fr
from .abelian_rank import CollocationConfig, extract_basis, lie_arcs, projection_residual, \
    rank_estimate
from .conic_geometry import ConfocalFamily
from .errors import ConfigError, DomainError, SingularPointError, WebLabError
from .pde_verify import run_suite
from .rank_quartic import classify
from .web_core import Box, Web, hexagon_defect, subwebs
from .webs import DEFAULT_BOX, DEFAULT_MARGIN, build_web, cartesian_relations

KINDS = ("cartesian", "bipolar", "tangent", "sixweb", "custom")
COMMANDS = ("verify", "hexagon", "rank", "quartic", "frobenius")
HEX_EPS = 0.05
HEX_TOL = 1e-8
HEX_CENTERS = 20


@dataclass(frozen=True)
class ExperimentConfig:
    a2: float = 2.0
    b2: float = 1.0
    kind: str = "cartesian"
    lambda0: float = 0.0
    foliations: tuple = ()
    box: Box = DEFAULT_BOX
    margin: float = DEFAULT_MARGIN
    degree: int = 8
    samples: int | None = None
    gap_threshold: float = 1e3
    seed: int = 0
    ode_tol: float = 1e-10
    fit_tol: float = 1e-8
    incidence_tol: float = 1e-5

    @property
    def family(self) -> ConfocalFamily:
        return ConfocalFamily(self.a2, self.b2)

    @property
    def collocation(self) -> CollocationConfig:
        return CollocationConfig(degree=self.degree, samples=self.samples,
                                 gap_threshold=self.gap_threshold, seed=self.seed)

    def web(self) -> Web:
        return build_web(self.kind, self.family, self.box, self.margin, self.lambda0,
                         self.foliations)

    def to_dict(self) -> dict:
        b = self.box
        return {
            "family": {"a2": self.a2, "b2": self.b2},
            "web": {"kind": self.kind, "lambda0": self.lambda0,
                    "foliations": list(self.foliations)},
            "box": {"xmin": b.xmin, "xmax": b.xmax, "ymin": b.ymin, "ymax": b.ymax},
            "margin": self.margin,
            "collocation": {"degree": self.degree, "samples": self.samples,
                            "gap_threshold": self.gap_threshold, "seed": self.seed},
            "tolerances": {"ode": self.ode_tol, "fit": self.fit_tol,
                           "incidence": self.incidence_tol},
        }


_SECTIONS = {
    "family": {"a2", "b2"},
    "web": {"kind", "lambda0", "foliations"},
    "box": {"xmin", "xmax", "ymin", "ymax"},
    "margin": None,
    "collocation": {"degree", "samples", "gap_threshold", "seed"},
    "tolerances": {"ode", "fit", "incidence"},
}


def config_from_dict(d: dict | None) -> ExperimentConfig:
    """Validate a parsed config; missing fields take the defaults."""
    d = d or {}
    if not isinstance(d, dict):
        raise ConfigError("config must be a mapping")
    for key, val in d.items():
        if key not in _SECTIONS:
            raise ConfigError(f"unknown config section {key!r}")
        allowed = _SECTIONS[key]
        if allowed is not None:
            if not isinstance(val, dict):
                raise ConfigError(f"section {key!r} must be a mapping")
            extra = set(val) - allowed
            if extra:
                raise ConfigError(f"unknown fields in {key!r}: {sorted(extra)}")
    fam = d.get("family", {})
    web = d.get("web", {})
    box = d.get("box", {})
    col = d.get("collocation", {})
    tol = d.get("tolerances", {})
    base = ExperimentConfig()
    try:
        cfg = ExperimentConfig(
            a2=float(fam.get("a2", base.a2)),
            b2=float(fam.get("b2", base.b2)),
            kind=str(web.get("kind", base.kind)),
            lambda0=float(web.get("lambda0", base.lambda0)),
            foliations=tuple(web.get("foliations") or ()),
            box=Box(float(box.get("xmin", base.box.xmin)), float(box.get("xmax", base.box.xmax)),
                    float(box.get("ymin", base.box.ymin)), float(box.get("ymax", base.box.ymax))),
            margin=float(d.get("margin", base.margin)),
            degree=int(col.get("degree", base.degree)),
            samples=None if col.get("samples") is None else int(col["samples"]),
            gap_threshold=float(col.get("gap_threshold", base.gap_threshold)),
            seed=int(col.get("seed", base.seed)),
            ode_tol=float(tol.get("ode", base.ode_tol)),
            fit_tol=float(tol.get("fit", base.fit_tol)),
            incidence_tol=float(tol.get("incidence", base.incidence_tol)),
        )
        cfg.family
        cfg.collocation
    except (TypeError, ValueError, WebLabError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown web kind {cfg.kind!r}")
    if cfg.kind == "tangent" and not (cfg.lambda0 < cfg.b2 or cfg.b2 < cfg.lambda0 < cfg.a2):
        raise ConfigError("lambda0 must satisfy lambda0 < b2 or b2 < lambda0 < a2")
    if cfg.kind == "custom" and not 2 <= len(cfg.foliations) <= 6:
        raise ConfigError("custom web needs 2–6 foliation names")
    if not 0 < cfg.margin < 1:
        raise ConfigError("margin must lie in (0, 1)")
    for t in (cfg.ode_tol, cfg.fit_tol, cfg.incidence_tol):
        if not 0 < t < 1:
            raise ConfigError("tolerances must lie in (0, 1)")
    try:
        cfg.web().sample_points(10, cfg.seed)
    except WebLabError as exc:
        raise ConfigError(f"admissible domain: {exc}") from exc
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return config_from_dict(data)


@dataclass
class Report:
    config: dict
    results: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    timing: dict | None = None
    arcs: list | None = None      # (foliation, u, X, Y, Z) rows, exported separately

    @property
    def passed(self) -> bool:
        return not self.errors and all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {"config": self.config, "results": self.results, "verdicts": self.verdicts,
                "errors": self.errors, "timing": self.timing}


# ---------------------------------------------------------------------------
# suites; each returns (results, verdicts)


def _inner(box: Box, pad: float) -> Box:
    return Box(box.xmin + pad, box.xmax - pad, box.ymin + pad, box.ymax - pad)


def suite_verify(cfg: ExperimentConfig, web: Web):
    res = run_suite(cfg.family, n=10, seed=cfg.seed)

    def rep(r):
        return {"identity": r.identity.value, "point": list(r.point),
                "h_values": r.h_values, "residuals": r.residuals,
                "order_estimate": r.order_estimate}

    out = {"pde": [rep(r) for r in res.reports], "controls": [rep(r) for r in res.controls],
           "s_loops": res.s_loops}
    verdicts = {
        "pde_order": all(r.order_estimate >= 1.9 for r in res.reports),
        "pde_residual": all(r.residuals[-1] < 1e-5 for r in res.reports),
        "pde_controls": all(abs(r.order_estimate) < 0.5 and r.residuals[-1] > 1e-4
                            for r in res.controls),
        "pde_s_loops": all(d < 1e-7 for d in res.s_loops),
    }
    return out, verdicts


def suite_hexagon(cfg: ExperimentConfig, web: Web, n_centers: int = HEX_CENTERS):
    out = []
    consistent = True
    for sw in subwebs(web, 3):
        rk = rank_estimate(sw, cfg.collocation)
        inner = dataclasses.replace(sw, box=_inner(sw.box, 0.15))
        x, y = inner.sample_points(4 * n_centers, cfg.seed)
        defects, skipped = [], 0
        for p in zip(x, y):
            if len(defects) == n_centers:
                break
            try:
                d = hexagon_defect(sw, p, HEX_EPS, rtol=cfg.ode_tol, atol=cfg.ode_tol)
            except WebLabError:
                skipped += 1
                continue
            defects.append(d.defect)
        if len(defects) < n_centers:
            raise DomainError(f"only {len(defects)} hexagon centers usable in {sw.name}")
        hexagonal = max(defects) < HEX_TOL
        consistent &= hexagonal == (rk.detected_rank == 1)
        out.append({"subweb": sw.name, "detected_rank": rk.detected_rank,
                    "gap_ratio": rk.gap_ratio, "next_ratio": rk.next_ratio,
                    "max_defect": max(defects), "median_defect": float(np.median(defects)),
                    "centers": len(defects), "skipped": skipped, "hexagonal": hexagonal})
    return {"subwebs": out, "eps": HEX_EPS, "tolerance": HEX_TOL}, {"hexagon": consistent}


def suite_rank(cfg: ExperimentConfig, web: Web):
    rk = rank_estimate(web, cfg.collocation)
    out = {"singular_values": rk.singular_values[-(rk.bol_bound + 2):],
           "detected_rank": rk.detected_rank, "gap_ratio": rk.gap_ratio,
           "next_ratio": rk.next_ratio, "shrink_factors": rk.shrink_factors,
           "degrees_tested": rk.degrees_tested, "bol_bound": rk.bol_bound}
    verdicts = {}
    if rk.detected_rank:
        basis = extract_basis(web, cfg.collocation, rk)
        out["holdout_residuals"] = list(basis.holdout_residuals)
        out["basis_singular_values"] = list(basis.singular_values)
        if cfg.kind == "cartesian":
            proj = {k: projection_residual(basis, v)
                    for k, v in cartesian_relations(cfg.family).items()}
            out["known_relations"] = proj
            verdicts["factorization"] = all(v < 1e-6 for v in proj.values())
    if cfg.kind in ("cartesian", "bipolar", "tangent"):
        verdicts["rank"] = rk.detected_rank == 3 and rk.gap_ratio >= cfg.gap_threshold
    elif cfg.kind == "sixweb":
        verdicts["rank"] = rk.detected_rank < 10
    else:
        verdicts["rank"] = rk.detected_rank <= rk.bol_bound
    return out, verdicts


_FRAME_KINDS = {"cartesian": fr.SystemKind.CARTESIAN, "bipolar": fr.SystemKind.BIPOLAR}
_PATTERNS = {"cartesian": "conic+2lines", "bipolar": "4lines-general",
             "tangent": "4lines-concurrent"}


def _grid(box: Box, n: int = 4, pad: float = 0.1):
    b = _inner(box, pad)
    return [(float(x), float(y)) for x in np.linspace(b.xmin, b.xmax, n)
            for y in np.linspace(b.ymin, b.ymax, n)]


def _center(box: Box):
    return (0.5 * (box.xmin + box.xmax), 0.5 * (box.ymin + box.ymax))


def _quartic_arcs(cfg: ExperimentConfig, web: Web):
    """Four arcs and their sample points: frame arcs for the two Frobenius
    systems, Lie arcs of the numerical basis otherwise."""
    if len(web) != 4:
        raise DomainError("the quartic suite needs a 4-web")
    if cfg.kind in _FRAME_KINDS:
        pts = _grid(cfg.box)
        arcs, _ = fr.transported_arcs(_FRAME_KINDS[cfg.kind], cfg.family, _center(cfg.box),
                                      pts, rtol=cfg.ode_tol, atol=cfg.ode_tol,
                                      margin=cfg.margin)
        return "frame", arcs, pts
    basis = extract_basis(web, cfg.collocation)
    x, y = web.sample_points(20, cfg.seed + 1)
    return "lie", lie_arcs(basis, web, (x, y)), list(zip(x.tolist(), y.tolist()))


def suite_quartic(cfg: ExperimentConfig, web: Web):
    source, arcs, pts = _quartic_arcs(cfg, web)
    q = classify(arcs, conic_tol=cfg.fit_tol, incidence_tol=cfg.incidence_tol)
    comps = [{"foliation": f.name, "kind": c.kind, "residual": c.residual,
              "coefficients": list(c.coefficients), "smooth": c.smooth}
             for f, c in zip(web.foliations, q.components)]
    rows = []
    px = np.array([p[0] for p in pts])
    py = np.array([p[1] for p in pts])
    for i, (f, arc) in enumerate(zip(web.foliations, arcs)):
        u = np.asarray(f.u((px, py)), dtype=float)
        rows += [(i, float(ui), *map(float, a)) for ui, a in zip(u, arc)]
    expected = _PATTERNS.get(cfg.kind)
    ok = q.pattern == expected if expected else q.pattern != "other"
    if ok and expected == "4lines-concurrent":
        ok = bool(q.incidences.get("harmonic"))
    out = {"source": source, "pattern": q.pattern, "expected": expected,
           "components": comps, "incidences": q.incidences, "n_samples": len(pts)}
    return out, {"quartic": ok}, rows


def suite_frobenius(cfg: ExperimentConfig, web: Web, n_loops: int = 5):
    fam = cfg.family
    if cfg.kind in _FRAME_KINDS:
        kind = _FRAME_KINDS[cfg.kind]
    elif cfg.kind == "tangent":
        kind = fr.SystemKind.TANGENT
    else:
        raise DomainError("the frobenius suite needs kind cartesian, bipolar or tangent")
    kw = dict(rtol=cfg.ode_tol, atol=cfg.ode_tol, margin=cfg.margin)
    side = 0.25
    inner = _inner(cfg.box, 0.05)
    rng = np.random.default_rng(cfg.seed)
    loops = []
    for _ in range(50 * n_loops):
        if len(loops) == n_loops:
            break
        c = (float(rng.uniform(inner.xmin, inner.xmax - side)),
             float(rng.uniform(inner.ymin, inner.ymax - side)))
        try:
            if kind is fr.SystemKind.TANGENT:
                init = fr.confocal_jet(kind, fam, c, cfg.lambda0)
            else:
                init = fr.FrameState.identity(c)
            d = fr.loop_defect(kind, fam, fr.square_loop(c, side), init, **kw)
        except (SingularPointError, DomainError):
            continue
        loops.append({"corner": list(c), "perimeter": 4 * side, "defect": d})
    if len(loops) < n_loops:
        raise DomainError(f"only {len(loops)} admissible loops found")
    out = {"system": kind.value, "loops": loops}
    verdicts = {"frobenius_loops": all(lp["defect"] < 1e-7 for lp in loops)}
    if kind in (fr.SystemKind.CARTESIAN, fr.SystemKind.BIPOLAR):
        inc = fr.displayed_incidence(kind, fam, _center(cfg.box), _grid(cfg.box, 3), **kw)
        out["displayed_incidence"] = inc
        verdicts["frobenius_lines"] = all(v < 1e-8 for v in inc.values())
    return out, verdicts


SUITES = {"verify": suite_verify, "hexagon": suite_hexagon, "rank": suite_rank,
          "quartic": suite_quartic, "frobenius": suite_frobenius}
_APPLIES = {
    "quartic": lambda cfg: cfg.kind in _PATTERNS or (cfg.kind == "custom"
                                                     and len(cfg.foliations) == 4),
    "frobenius": lambda cfg: cfg.kind in ("cartesian", "bipolar", "tangent"),
}


def run(command: str, cfg: ExperimentConfig, timing: bool = False) -> Report:
    """Run one suite (or ``all`` applicable suites) and assemble the report."""
    if command != "all" and command not in SUITES:
        raise ConfigError(f"unknown command {command!r}")
    names = [c for c in COMMANDS if _APPLIES.get(c, lambda _: True)(cfg)] \
        if command == "all" else [command]
    rep = Report(config=cfg.to_dict(), timing={} if timing else None)
    web = cfg.web()
    for name in names:
        t0 = time.perf_counter()
        try:
            got = SUITES[name](cfg, web)
        except (WebLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
            rep.errors[name] = f"{type(exc).__name__}: {exc}"
            continue
        finally:
            if timing:
                rep.timing[name] = time.perf_counter() - t0
        rep.results[name] = got[0]
        rep.verdicts.update(got[1])
        if name == "quartic":
            rep.arcs = got[2]
    if command == "all":
        rep.results["skipped"] = [c for c in COMMANDS if c not in names]
    return rep


# ---------------------------------------------------------------------------
# serialization


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.10g}")
    return obj


def to_json(report: Report) -> str:
    return json.dumps(_clean(report.to_dict()), sort_keys=True, indent=2) + "\n"


def export_arcs(report: Report, path) -> int:
    """Write the quartic arcs as CSV (foliation, u, X, Y, Z); returns the row count."""
    if not report.arcs:
        raise DomainError("no arcs")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["foliation", "u", "X", "Y", "Z"])
        for i, u, X, Y, Z in report.arcs:
            w.writerow([i] + [f"{v:.12g}" for v in (u, X, Y, Z)])
    return len(report.arcs)
