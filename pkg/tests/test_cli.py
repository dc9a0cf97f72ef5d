import json
import math

import pytest

from randpack import __version__
from randpack.cli import ExperimentConfig, emit_fig1_curves, main, run

D_UNIT = 1 / math.sqrt(math.pi)


def test_sample_poisson_header(tmp_path):
    out = tmp_path / "pts.txt"
    assert main(["sample-poisson", "--dim", "2", "--half-side", "5", "--intensity", "1",
                 "--seed", "7", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# dim=2 half_side=5")
    assert all(len(line.split()) == 2 for line in lines[1:])


def test_cover_c5(tmp_path):
    edges = tmp_path / "c5.txt"
    edges.write_text("# vertices=5 threshold=1\n0 1\n1 2\n2 3\n3 4\n0 4\n")
    out = tmp_path / "cover.json"
    assert main(["cover", "--input", str(edges), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["size"] == 3 and doc["mode"] == "exact" and len(doc["cover"]) == 3
    assert doc["provenance"]["version"] == __version__
    assert main(["cover", "--input", str(edges), "--mode", "constructive", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["size"] <= 3


def test_census_and_decimate_pipeline(tmp_path):
    pts = tmp_path / "pts.txt"
    main(["sample-poisson", "--half-side", "6", "--seed", "3", "--out", str(pts)])
    report = tmp_path / "census.json"
    edges = tmp_path / "edges.txt"
    assert main(["graph-census", "--input", str(pts), "--distance", "0.6",
                 "--edges-out", str(edges), "--out", str(report)]) == 0
    census = json.loads(report.read_text())["census"]
    assert set(census) >= {"M", "M1", "M2", "M3"}
    assert main(["cover", "--input", str(edges), "--out", str(tmp_path / "c.json")]) == 0
    dec = tmp_path / "dec.json"
    tau = tmp_path / "tau.txt"
    assert main(["decimate", "--input", str(pts), "--distance", "0.6", "--mode", "exact",
                 "--tau-out", str(tau), "--out", str(dec)]) == 0
    doc = json.loads(dec.read_text())
    assert all(doc["checks"].values())
    assert doc["tau_count"] == len(tau.read_text().splitlines()) - 1


def test_schmidt_table(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["schmidt-table", "--dims", "13,20", "--xs", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,x,limit_cdf,remainder,lower,upper,width" and len(lines) == 3
    assert main(["schmidt-table", "--dims", "12", "--out", str(out)]) == 2


def test_fig1_csv(tmp_path):
    text = emit_fig1_curves(2, [D_UNIT], resolution=3)
    lines = text.splitlines()
    assert lines[0] == "curve_id,nu,value"
    assert len(lines) == 1 + 3 + 3
    row = [line.split(",") for line in lines if line.startswith("lower13")][0]
    assert float(row[1]) == pytest.approx(0.5) and float(row[2]) == pytest.approx(0.125)
    assert "\r" not in text
    out = tmp_path / "f.csv"
    assert main(["fig1", "--out", str(out)]) == 0


def test_d_curve_small(tmp_path):
    out = tmp_path / "curve.csv"
    code = main(["d-curve", "--half-side", "4", "--trials", "4", "--distance", "0.3,0.5",
                 "--seed", "2", "--out", str(out)])
    lines = out.read_text().splitlines()
    assert lines[0] == "d,nu_target,bound_kind,rhs,mean_density,stderr,trials,flag"
    assert len(lines) == 5
    assert code in (0, 3)
    flags = [line.rsplit(",", 1)[1] for line in lines[1:]]
    assert all(f.split(";")[0] in ("ok", "below_rhs") for f in flags)
    lower13_failed = any(line.split(",")[2] == "lower13" and line.split(",")[7].startswith("below_rhs")
                         for line in lines[1:])
    assert code == (3 if lower13_failed else 0)


def test_d_curve_exit_code_on_violation(tmp_path):
    # slack -1 demands twice the bound, which a tiny box cannot reach
    code = main(["d-curve", "--half-side", "3", "--trials", "2", "--distance", "0.5",
                 "--slack", "-1", "--out", str(tmp_path / "c.csv")])
    assert code == 3


def test_invalid_inputs(tmp_path, capsys):
    assert run(ExperimentConfig("graph-census", {"half_side": 1.0, "distance": [3.0]})) == 2
    assert run(ExperimentConfig("nope")) == 2
    assert main(["cover", "--input", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["fig1", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"version": 99, "subcommand": "fig1"}))
    assert main(["fig1", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "invalid" in err


def test_config_round_trip_and_hash(tmp_path):
    cfg = ExperimentConfig("fig1", {"dim": 3, "out": "a.csv"})
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert json.loads(cfg.to_json())["version"] == 1
    assert cfg.config_hash() == ExperimentConfig("fig1", {"dim": 3, "out": "b.csv"}).config_hash()
    assert cfg.config_hash() != ExperimentConfig("fig1", {"dim": 2}).config_hash()
    path = tmp_path / "cfg.json"
    path.write_text(ExperimentConfig("fig1", {"dim": 3, "resolution": 5}).to_json())
    out = tmp_path / "f.csv"
    assert main(["fig1", "--config", str(path), "--grid-size", "4", "--out", str(out)]) == 0
    assert sum(1 for line in out.read_text().splitlines() if line.startswith("explicit")) == 5


def test_lattice2d_small(tmp_path):
    out = tmp_path / "l.csv"
    rep = tmp_path / "l.json"
    code = main(["lattice2d", "--trials", "5000", "--seed", "1", "--out", str(out),
                 "--report", str(rep)])
    assert code == 0
    doc = json.loads(rep.read_text())
    assert doc["provenance"]["seed"] == 1
    assert out.read_text().splitlines()[0] == "x,y,delta"
