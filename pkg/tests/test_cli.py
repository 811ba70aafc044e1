import csv
import json

import pytest
import yaml

from weblab.cli import main
from weblab.errors import ConfigError, DomainError
from weblab.report import ExperimentConfig, Report, config_from_dict, export_arcs, run, to_json


def write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


def test_default_config_round_trip():
    cfg = ExperimentConfig()
    assert config_from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("data", [
    {"flavour": {}},
    {"web": {"kind": "hexagonal"}},
    {"web": {"kind": "tangent", "lambda0": 1.5e0, "colour": 1}},
    {"web": {"kind": "tangent", "lambda0": 1.0}},
    {"web": {"kind": "tangent", "lambda0": 3.0}},
    {"web": {"kind": "custom", "foliations": ["x_lines"]}},
    {"web": {"kind": "custom", "foliations": ["x_lines", "spirals"]}},
    {"margin": 0.0},
    {"tolerances": {"ode": 2.0}},
    {"family": {"a2": 1.0, "b2": 2.0}},
    {"collocation": {"degree": 0}},
    {"box": {"xmin": -0.01, "xmax": 0.01, "ymin": -0.01, "ymax": 0.01}},
    {"box": "everywhere"},
])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_invalid_yaml_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("web: [unclosed\n")
    assert main(["rank", "--config", str(p)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["rank", "--config", str(tmp_path / "none.yaml")]) == 2


def test_rank_cartesian_passes(tmp_path):
    out = tmp_path / "r.json"
    assert main(["rank", "--config", write_cfg(tmp_path, {"web": {"kind": "cartesian"}}),
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["results"]["rank"]["detected_rank"] == 3
    assert rep["verdicts"] == {"rank": True, "factorization": True}
    assert rep["timing"] is None


def test_rank_sixweb_below_maximal(tmp_path):
    out = tmp_path / "r.json"
    assert main(["rank", "--config", write_cfg(tmp_path, {"web": {"kind": "sixweb"}}),
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["results"]["rank"]["detected_rank"] < 10
    assert rep["results"]["rank"]["bol_bound"] == 10


def test_verdict_failure_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"collocation": {"gap_threshold": 1e12}})
    assert main(["rank", "--config", cfg]) == 1
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdicts"]["rank"] is False


def test_suite_error_exit_code(tmp_path, capsys):
    # a 3-web has no quartic; the suite error is reported, not raised
    cfg = write_cfg(tmp_path, {"web": {"kind": "custom",
                                       "foliations": ["x_lines", "y_lines", "ellipses"]}})
    assert main(["quartic", "--config", cfg]) == 2
    cap = capsys.readouterr()
    assert "quartic" in json.loads(cap.out)["errors"]
    assert "quartic failed" in cap.err


def test_seed_override(tmp_path, capsys):
    assert main(["rank", "--seed", "5"]) == 0
    assert json.loads(capsys.readouterr().out)["config"]["collocation"]["seed"] == 5


def test_quartic_tangent_harmonic(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"web": {"kind": "tangent", "lambda0": 0.0}})
    assert main(["quartic", "--config", cfg]) == 0
    q = json.loads(capsys.readouterr().out)["results"]["quartic"]
    assert q["pattern"] == "4lines-concurrent"
    assert abs(q["incidences"]["cross_ratio"] + 1) < 1e-4


def test_arcs_csv(tmp_path):
    arcs = tmp_path / "arcs.csv"
    assert main(["quartic", "--arcs", str(arcs), "--out", str(tmp_path / "q.json")]) == 0
    with open(arcs) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["foliation", "u", "X", "Y", "Z"]
    blocks = {r[0] for r in rows[1:]}
    assert blocks == {"0", "1", "2", "3"}
    q = json.loads((tmp_path / "q.json").read_text())["results"]["quartic"]
    kinds = [c["kind"] for c in q["components"]]
    assert kinds == ["line", "line", "conic", "conic"]


def test_bipolar_arcs_are_lines(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"web": {"kind": "bipolar"}})
    assert main(["quartic", "--config", cfg]) == 0
    q = json.loads(capsys.readouterr().out)["results"]["quartic"]
    assert [c["kind"] for c in q["components"]] == ["line"] * 4


def test_no_arcs_error(tmp_path, capsys):
    assert main(["rank", "--arcs", str(tmp_path / "a.csv")]) == 2
    assert "no arcs" in capsys.readouterr().err
    with pytest.raises(DomainError, match="no arcs"):
        export_arcs(Report(config={}), tmp_path / "b.csv")


def test_all_skips_inapplicable_suites():
    cfg = config_from_dict({"web": {"kind": "sixweb"}})
    rep = run("all", cfg)
    assert set(rep.results["skipped"]) == {"quartic", "frobenius"}
    assert rep.passed


def test_report_is_deterministic():
    cfg = ExperimentConfig()
    assert to_json(run("rank", cfg)) == to_json(run("rank", cfg))


def test_timing_flag(capsys):
    assert main(["rank", "--timing"]) == 0
    assert json.loads(capsys.readouterr().out)["timing"]["rank"] > 0
