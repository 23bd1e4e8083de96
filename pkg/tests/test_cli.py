import json

import numpy as np
import pytest

from dichannel.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, load_config, main
from dichannel.formats import read_boundary, read_channel, read_correlations, read_report


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*args):
    return main([str(a) for a in args])


def test_simulate_is_deterministic(work):
    for name in ("a.json", "b.json"):
        assert run("simulate", "--channel", "ad", "--lambda", 0.4, "--grid", 5, "--seed", 3, "--shots", 1000, "--out", name) == EXIT_OK
    assert (work / "a.json").read_bytes() == (work / "b.json").read_bytes()
    doc = json.loads((work / "a.json").read_text())
    assert doc["seed"] == 3 and len(doc["settings"]) == 50


def test_simulate_requires_seed_and_physical_channel(work):
    assert run("simulate", "--channel", "ad", "--lambda", 0.4, "--grid", 3) == EXIT_INPUT
    assert run("simulate", "--channel", "ad", "--lambda", 1.5, "--grid", 3, "--seed", 1) == EXIT_INPUT
    assert run("simulate", "--channel", "d2", "--d", 1, 1, 1, "--c3", 0.1, "--grid", 3, "--seed", 1) == EXIT_INPUT


def test_qpt_recovers_channel(work):
    run("simulate", "--channel", "ad", "--lambda", 0.4, "--tomography", "--seed", 1, "--shots", 10**5, "--out", "t.json")
    assert run("qpt", "t.json", "--restrict-d2", "--general", "--restarts", 20, "--general-restarts", 5, "--report", "fit.json") == EXIT_OK
    ch = read_channel(work / "channel.json")
    assert (ch.d2, ch.d3, ch.c3) == pytest.approx((np.sqrt(0.6), 0.6, 0.4), abs=0.02)
    assert read_report(work / "fit.json")["kind"] == "fit"


def test_qpt_rejects_incomplete_settings(work, capsys):
    run("simulate", "--channel", "ad", "--lambda", 0.4, "--grid", 3, "--seed", 1, "--out", "g.json")
    assert run("qpt", "g.json", "--restrict-d2", "--restarts", 5) == EXIT_INPUT
    assert "rank" in capsys.readouterr().err


def test_validate_and_characterize(work):
    run("simulate", "--channel", "ad", "--lambda", 0.2, "--grid", 9, "--seed", 1, "--exact", "--correlations", "c.csv")
    assert len(read_correlations(work / "c.csv")) == 81
    assert run("validate", "c.csv", "--channel", "ad", "--lambda", 0.8, "--restarts", 20, "--figure", "v.svg") == EXIT_OK
    v = read_report(work / "verdict.json")
    assert not v["validated"] and max(o["margin"] for o in v["offenders"]) >= 0.1
    assert (work / "v.svg").read_text().startswith("<svg")
    assert run("characterize", "c.csv", "--restarts", 20, "--figure", "f.svg") == EXIT_OK
    fit = read_report(work / "fit.json")
    assert fit["mu"] == pytest.approx(1.0, abs=0.03)
    assert run("report", "verdict.json", "fit.json") == EXIT_OK


def test_characterize_errors(work):
    (work / "empty.csv").write_text("pair_id,meas_id,p11,p12,s11,s12\n")
    assert run("characterize", "empty.csv") == EXIT_INPUT
    (work / "bad.csv").write_text("p11,p12\n0.5,0.5\n1.2,0.5\n")
    assert run("characterize", "bad.csv", "--restarts", 5) == EXIT_INFEASIBLE
    assert run("characterize", "missing.csv") == EXIT_INPUT


def test_boundary_command(work):
    assert run("boundary", "--channel", "identity", "--n", 256, "--out", "sq.csv") == EXIT_OK
    v = read_boundary(work / "sq.csv")
    assert {tuple(np.round(p, 12)) for p in v} == {(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)}
    assert run("boundary", "--channel", "depolarizing", "--n", 256, "--out", "dep.csv") == EXIT_OK
    v = read_boundary(work / "dep.csv")
    assert np.allclose(v[:, 0], v[:, 1])


def test_config_precedence(work):
    (work / "cfg.json").write_text(json.dumps({"shots": 77, "seed": 5, "grid": 2}))
    cfg = load_config(["--config", "cfg.json", "simulate", "--shots", "99", "--channel", "identity"])
    assert cfg.shots == 99 and cfg.seed == 5 and cfg.grid == 2
    assert cfg.out == "counts.json"
