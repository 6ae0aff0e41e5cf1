import json

import pytest

from susyband.cli import run
from susyband.elliptic import complete_k


def read(path):
    return path.read_bytes()


def test_bands_writes_edges(tmp_path):
    out = tmp_path / "bands"
    code = run([
        "bands", "--lame-n", "1", "--lame-m", "0.5",
        "--emin", "0", "--emax", "3", "--out", str(out),
        "--sweep-points", "40",
    ])
    assert code == 0
    doc = json.loads((out / "edges.json").read_text())
    assert len(doc["edges"]) == 3
    for found, exact in zip(doc["edges"], (0.5, 1.0, 1.5)):
        assert found == pytest.approx(exact, abs=1e-6)
    lines = (out / "discriminant.csv").read_text().strip().split("\n")
    assert lines[0] == "E,D,class_tag"
    assert len(lines) == 41


def test_bands_config_potential(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "potential": {"kind": "constant", "value": 0.0, "period": 2.0},
        "e_min": 0.1, "e_max": 2.0,
    }))
    out = tmp_path / "free"
    assert run(["bands", "--config", str(cfg), "--out", str(out), "--sweep-points", "16"]) == 0
    doc = json.loads((out / "edges.json").read_text())
    assert doc["window"] == [0.1, 2.0]


def test_transform_scenario_diagnostics(tmp_path):
    out = tmp_path / "t"
    code = run([
        "transform", "--scenario", "fig1a", "--out", str(out),
    ])
    assert code == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["order"] == 1
    assert diag["periodic"] is True
    assert diag["displacement"]["delta"] == pytest.approx(complete_k(0.5), abs=1e-4)
    assert diag["displacement"]["residual"] < 1e-4
    header = (out / "transform.csv").read_text().split("\n", 1)[0]
    assert header == "x,V,V_partner,beta_or_alpha,psi_kernel_1,psi_kernel_2"


def test_transform_from_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "potential": {"kind": "lame", "n": 1, "m": 0.5},
        "order": 1,
        "seed": "general",
        "epsilon": 0.0,
    }))
    out = tmp_path / "t2"
    assert run(["transform", "--config", str(cfg), "--out", str(out)]) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["periodic"] is False
    assert diag["kernel"][0]["normalizable"] is True


def test_invariance_reports(tmp_path):
    out = tmp_path / "inv"
    assert run(["invariance", "--lame-n", "1", "--epsilon", "-1", "--out", str(out)]) == 0
    doc = json.loads((out / "invariance.json").read_text())
    assert doc["verdict"] == "invariant"


def test_states_emits_traces(tmp_path):
    out = tmp_path / "st"
    assert run(["states", "--lame-n", "1", "--epsilon", "-1", "--out", str(out)]) == 0
    doc = json.loads((out / "states.json").read_text())
    assert len(doc["seeds"]) == 2
    assert (out / "seed_0.csv").exists()


def test_malformed_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["bands", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_missing_potential_exit_2(tmp_path):
    assert run(["invariance", "--epsilon", "1.0", "--out", str(tmp_path)]) == 2


def test_midband_energy_exit_3(tmp_path):
    assert (
        run(["invariance", "--lame-n", "1", "--epsilon", "0.75", "--out", str(tmp_path)])
        == 3
    )


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SUSYBAND_SAMPLES_PER_PERIOD", "64")
    monkeypatch.setenv("SUSYBAND_PERIODS", "4")
    out = tmp_path / "small"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "potential": {"kind": "lame", "n": 1, "m": 0.5},
        "order": 1,
        "seed": "bloch",
        "epsilon": -1.0,
    }))
    assert run(["transform", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "transform.csv").read_text().strip().split("\n")
    assert len(lines) == 4 * 64 + 2  # header + (periods * samples + 1) rows


def test_bad_env_value_exit_2(tmp_path, monkeypatch):
    monkeypatch.setenv("SUSYBAND_PERIODS", "many")
    assert run(["bands", "--lame-n", "1", "--emin", "0", "--emax", "1",
                "--out", str(tmp_path)]) == 2


def test_repeat_runs_byte_identical(tmp_path):
    args = [
        "bands", "--lame-n", "1", "--lame-m", "0.5",
        "--emin", "0", "--emax", "3", "--sweep-points", "64",
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert read(out1 / "discriminant.csv") == read(out2 / "discriminant.csv")
    assert read(out1 / "edges.json") == read(out2 / "edges.json")
