import csv
import json

import numpy as np
import pytest

from nhred import __version__, cli
from nhred.cli import ConfigError, main, strip_timestamp


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_simulate_writes_full_trajectory(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--model", "chaplygin-ball", "--out", str(out)]) == 0
    header, data = _read_csv(out)
    assert header == ["t", "g11", "g12", "g13", "g21", "g22", "g23", "g31", "g32", "g33", "x", "y",
                      "p1", "p2", "p3", "H", "J_1"]
    assert data.shape == (10001, len(header))
    assert data[0, 0] == 0.0 and np.isclose(data[-1, 0], 10.0)
    j = data[:, header.index("J_1")]
    assert np.max(np.abs(j - j[0])) / abs(j[0]) <= 1e-6


def test_csv_floats_carry_17_significant_digits(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--model", "nonholonomic-particle", "--t-end", "0.01", "--out", str(out)]) == 0
    header, _ = _read_csv(out)
    assert header == ["t", "x", "y", "z", "p1", "p2", "H", "J_1"]
    with open(out) as fh:
        fields = fh.read().splitlines()[2].split(",")
    assert all(text == format(float(text), ".17g") for text in fields)
    assert any(len(text.lstrip("-0.").split("e")[0].replace(".", "")) == 17 for text in fields)


@pytest.mark.parametrize("name", ["nonholonomic-particle", "chaplygin-ball"])
def test_zero_momentum_preset_is_an_equilibrium(tmp_path, name):
    out = tmp_path / "zero.csv"
    assert main(["simulate", "--model", name, "--preset", "zero", "--t-end", "2", "--out", str(out)]) == 0
    header, data = _read_csv(out)
    assert np.max(np.ptp(data[:, 1:header.index("H")], axis=0)) <= 1e-12


def test_bmf_zero_level_keeps_first_integral_at_zero(tmp_path):
    out = tmp_path / "bmf.csv"
    assert main(["simulate", "--model", "bmf-sphere", "--preset", "zero-level", "--t-end", "2",
                 "--out", str(out)]) == 0
    header, data = _read_csv(out)
    assert header[-1] == "F" and "J_1" not in header
    assert np.max(np.abs(data[:, -1])) <= 1e-9


def test_left_admissible_region_maps_to_exit_2(tmp_path, monkeypatch, capsys):
    def leave(*args, **kwargs):
        raise cli.LeftAdmissibleRegion(1.5, np.zeros(3))

    monkeypatch.setattr(cli, "integrate", leave)
    assert main(["simulate", "--model", "ball-on-surface", "--out", str(tmp_path / "s.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_config_files_in_both_formats(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[model]\nname = chaplygin-ball\n[parameters]\ninertia = 1.0, 2.0, 3.0\n"
                   "[integrator]\ndt = 0.01\nt_end = 0.5\n[sampling]\nseed = 4\n")
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"model": {"name": "chaplygin-ball"}, "parameters": {"inertia": [1.0, 2.0, 3.0]},
                              "integrator": {"dt": 0.01, "t_end": 0.5}, "sampling": {"seed": 4}}))
    a, b = (cli.resolve_settings(cli.build_parser().parse_args(["simulate", "--config", str(p)])) for p in (ini, js))
    assert a == b
    assert a["parameters"]["inertia"] == [1.0, 2.0, 3.0] and a["integrator"]["dt"] == 0.01
    # command-line flags override the document
    c = cli.resolve_settings(cli.build_parser().parse_args(["simulate", "--config", str(ini), "--dt", "0.02"]))
    assert c["integrator"]["dt"] == 0.02


@pytest.mark.parametrize("text,needle", [
    ("[model]\nname = chaplygin-ball\ncolour = red\n", "colour"),
    ("[model]\nname = chaplygin-ball\n[extras]\nx = 1\n", "extras"),
    ("[model]\nname = chaplygin-ball\n[integrator]\ndt = fast\n", "dt"),
    ('{"model": {"name": "chaplygin-ball"}, "sampling": {"sample": 3}}', "sample"),
])
def test_config_rejects_unknown_or_invalid_entries(tmp_path, capsys, text, needle):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    assert main(["verify", "--config", str(path)]) == 1
    assert needle in capsys.readouterr().err
    with pytest.raises(ConfigError, match=needle):
        cli.load_config(path)


def test_usage_errors(tmp_path, capsys):
    assert main(["simulate"]) == 1
    assert main(["simulate", "--model", "chaplygin-ball", "--preset", "nope"]) == 1
    assert main(["simulate", "--model", "chaplygin-ball", "--dt", "-1"]) == 1
    assert main(["reduce", "--model", "ball-on-surface", "--mu", "1", "--out", str(tmp_path / "l.json")]) == 1
    assert main(["verify", "--model", "chaplygin-ball", "--suite", "momentum", "--samples", "1",
                 "--expect-fail", "momentum.nonexistent", "--out", str(tmp_path / "r.json")]) == 1
    assert main(["frobnicate"]) == 1
    capsys.readouterr()


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_nonholonomic_bivector_fails_momentum_suite_unless_expected(tmp_path, capsys):
    out = tmp_path / "r.json"
    base = ["verify", "--model", "chaplygin-ball", "--suite", "momentum", "--bivector", "nh",
            "--samples", "5", "--out", str(out)]
    assert main(base) == 3
    report = json.loads(out.read_text())
    assert not report["passed"]
    assert main([*base, "--expect-fail", "momentum.residual"]) == 0
    report = json.loads(out.read_text())
    check = next(c for c in report["checks"] if c["name"] == "momentum.residual")
    assert report["passed"] and check["passed"] and check["expected_fail"]
    assert check["max_residual"] > check["tolerance"]
    capsys.readouterr()


def test_report_schema(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "--model", "nonholonomic-particle", "--samples", "3", "--seed", "2",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["schema"] == "nhred.report/1" and report["tool_version"] == __version__
    assert set(report) >= {"model", "parameters", "seed", "samples", "suites", "bivector", "levels", "checks",
                           "skipped", "passed", "timestamp"}
    for c in report["checks"]:
        assert set(c) == {"name", "property", "samples", "max_residual", "tolerance", "passed", "expected_fail"}
    assert json.loads(strip_timestamp(out.read_text())).get("timestamp") is None
    capsys.readouterr()


def test_reduce_writes_leaf_document(tmp_path, capsys):
    out = tmp_path / "leaf.json"
    assert main(["reduce", "--model", "chaplygin-ball", "--samples", "4", "--mu", "0.5", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "nhred.leaf/1" and "pair_convention" in doc
    assert len(doc["points"]) == 4
    for rec in doc["points"]:
        assert rec["level"] == [0.5]
        assert {"omega_one", "omega_B", "graph_form_B", "leaf_bivector_B", "phi_mu", "hat_b"} <= set(rec)
        wb = np.array(rec["omega_B"])
        assert np.allclose(np.array(rec["graph_form_B"]), -wb)
        assert np.allclose(np.array(rec["leaf_bivector_B"]) @ -wb, np.eye(len(wb)), atol=1e-8)
    capsys.readouterr()


def _flatten(d):
    for v in d.values():
        yield from _flatten(v) if isinstance(v, dict) else [v]


def test_reduce_chaplygin_zero_level_routes_agree(tmp_path, capsys):
    out = tmp_path / "leaf.json"
    assert main(["reduce", "--model", "chaplygin-ball", "--samples", "6", "--mu", "0", "--out", str(out)]) == 0
    for rec in json.loads(out.read_text())["points"]:
        assert max(_flatten(rec["residuals"])) <= 1e-7
        assert max(_flatten(rec["identification_residuals"])) <= 1e-7
    capsys.readouterr()


def test_reduce_surface_leaf_form_is_canonical(tmp_path, capsys):
    out = tmp_path / "leaf.json"
    assert main(["reduce", "--model", "ball-on-surface", "--samples", "4", "--mu", "0.7,-0.3",
                 "--out", str(out)]) == 0
    canonical = np.array([[0.0, 1.0], [-1.0, 0.0]])  # dτ̃∧dp₀
    for rec in json.loads(out.read_text())["points"]:
        assert np.max(np.abs(np.array(rec["graph_form_B"]) - canonical)) <= 1e-9
    capsys.readouterr()


def test_reduce_particle_unit_level_bivector(tmp_path, capsys):
    out = tmp_path / "leaf.json"
    assert main(["reduce", "--model", "nonholonomic-particle", "--samples", "4", "--mu", "1",
                 "--out", str(out)]) == 0
    for rec in json.loads(out.read_text())["points"]:
        assert np.allclose(rec["leaf_bivector_B"], [[0.0, 1.0], [-1.0, 0.0]], atol=1e-9)  # ∂y∧∂p_y
    capsys.readouterr()


def test_reduce_rejects_model_without_gauge_momenta(tmp_path, capsys):
    assert main(["reduce", "--model", "bmf-sphere", "--out", str(tmp_path / "l.json")]) == 1
    assert "dmomentum" in capsys.readouterr().err
