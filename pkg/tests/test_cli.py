import csv
import json

import pytest

from weakineq.cli import main


def _run(tmp_path, command, cfg, name="cfg.json", out="out", extra=()):
    path = tmp_path / name
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    out_dir = tmp_path / out
    code = main([command, "--config", str(path), "--out", str(out_dir), *extra])
    return code, out_dir


def test_measure_command(tmp_path):
    code, out = _run(tmp_path, "measure", {"measure": {"family": "gaussian"}})
    assert code == 0
    lines = (out / "cdf.csv").read_text().splitlines()
    assert lines[0].startswith("# manifest ")
    assert lines[1] == "x,cdf,density"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["digest"] == lines[0].split()[-1]


def test_beta_command_reports_lsi_regime(tmp_path, capsys):
    code, out = _run(tmp_path, "beta", {"measure": {"family": "subexp", "alpha": 2}})
    assert code == 0
    assert "bounded" in capsys.readouterr().out
    res = json.loads((out / "beta.json").read_text())
    assert res["hardy"]["lower"] <= res["hardy"]["upper"]
    with open(out / "beta.csv") as fh:
        rows = [r for r in csv.reader(fh) if not r[0].startswith("#")]
    assert rows[0] == ["s", "beta"]


def test_convert_to_spi(tmp_path):
    cfg = {"certificate": {"kind": "WLSI", "rate": {"type": "constant", "c": 3}}, "target": "SPI"}
    code, out = _run(tmp_path, "convert", cfg)
    assert code == 0
    with open(out / "spi.csv") as fh:
        rows = [r for r in csv.reader(fh) if not r[0].startswith("#")]
    assert float(rows[1][1]) == pytest.approx(6.0)
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["kind"] == "SPI"


def test_verify_exit_codes(tmp_path):
    good = {"measure": {"family": "subexp", "alpha": 1.5},
            "beta": {"type": "log", "scale": 23.3, "power": 1 / 3}, "families": ["capacity_ramps"]}
    assert _run(tmp_path, "verify", good, out="a")[0] == 0
    bad = dict(good, beta={"type": "constant", "c": 0.01})
    code, out = _run(tmp_path, "verify", bad, out="b")
    assert code == 2
    assert json.loads((out / "verify.json").read_text())["n_violations"] > 0


def test_capacity_and_report(tmp_path):
    code, out = _run(tmp_path, "capacity", {"measure": {"family": "double_exp"},
                                             "beta": {"type": "log", "scale": 50}})
    assert code == 0
    assert json.loads((out / "capacity.json").read_text())["necessary"]["n_violations"] == 0
    code, rep = _run(tmp_path, "report", {"dirs": [str(out)]}, name="r.json", out="rep")
    assert code == 0
    entries = json.loads((rep / "report.json").read_text())["entries"]
    assert any(k.endswith("capacity.json") for k in entries)


def test_bounds_command(tmp_path):
    cfg = {"curves": [{"type": "lo", "alpha": 1.5, "eps": 0.1},
                      {"type": "xi", "beta": {"type": "log", "power": 1 / 3}, "eps": 0.1}]}
    code, out = _run(tmp_path, "bounds", cfg)
    assert code == 0
    assert (out / "curve_0.csv").exists() and (out / "curve_1.csv").exists()
    code, _ = _run(tmp_path, "bounds", {"curves": [{"type": "entropy0"}]}, out="x")
    assert code == 1


def test_simulate_ou(tmp_path):
    cfg = {"solver": {"potential": {"family": "gaussian", "scale": 0.5}, "T": 0.6931471805599453,
                      "initial": {"kind": "dirac", "x": 1.0}, "n": 1024},
           "bounds": [{"type": "entropy0"}]}
    code, out = _run(tmp_path, "simulate", cfg)
    assert code == 0
    v = json.loads((out / "verdicts.json").read_text())
    assert v["verdict"] == "all bounds hold"
    assert v["entropy_monotone"] and v["pinsker"]
    assert v["ou_validation"]["mean"] == pytest.approx(0.5, abs=5e-3)


def test_config_errors(tmp_path, capsys):
    code, _ = _run(tmp_path, "measure", {"measure": {"family": "gaussian"}, "extra": 1})
    assert code == 1
    assert "extra" in capsys.readouterr().err
    code, _ = _run(tmp_path, "measure", '{\n  "measure": ,\n}', name="bad.json", out="o2")
    assert code == 1
    assert "bad.json:2:" in capsys.readouterr().err
    pol = tmp_path / "pol.json"
    pol.write_text(json.dumps({"kappa": -1}))
    code, _ = _run(tmp_path, "measure", {"measure": {"family": "gaussian"}}, out="o3",
                   extra=("--constants", str(pol)))
    assert code == 1


def test_constants_enter_the_manifest(tmp_path):
    pol = tmp_path / "pol.json"
    pol.write_text(json.dumps({"kappa": 0.5}))
    code, out = _run(tmp_path, "measure", {"measure": {"family": "gaussian"}}, extra=("--constants", str(pol)))
    assert code == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["constants"]["kappa"] == 0.5
