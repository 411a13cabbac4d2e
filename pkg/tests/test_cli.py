import json
import math
from pathlib import Path

import numpy as np
import pytest

from weylscope.cli import ExperimentConfig, main, run
from weylscope.errors import ConfigError


def write_cfg(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_weyl_square_pipeline(tmp_path):
    out = tmp_path / "sq"
    cfg = ExperimentConfig.from_json({
        "task": "weyl",
        "domain": {"kind": "box", "sides": [math.pi, math.pi]},
        "bc": "dirichlet",
        "out": str(out),
        "params": {"lambda_max": 5.0, "grid_points": 41,
                   "windows": [2.0, 2.1, 2.2, 2.3, 2.4]},
    })
    assert run(cfg) == 0
    rows = (out / "remainder.csv").read_text().strip().splitlines()
    last = rows[-1].split(",")
    assert int(last[1]) == 15
    assert float(last[3]) == pytest.approx(0.365046, abs=1e-6)


def test_orbits_circle_csv(tmp_path):
    out = tmp_path / "orb"
    cfg = ExperimentConfig.from_json({
        "task": "orbits",
        "domain": {"kind": "disk", "radius": 1.0},
        "out": str(out),
        "params": {"L_max": 6.0, "eps_search": 0.5},
    })
    assert run(cfg) == 0
    rows = (out / "length_spectrum.csv").read_text().strip().splitlines()[1:]
    lengths = sorted(float(r.split(",")[0]) for r in rows)
    expected = [2 * n * np.sin(np.pi / n) for n in (2, 3, 4, 5)]
    assert np.allclose(lengths, expected, atol=1e-9)


def test_invalid_config_names_field(tmp_path, capsys):
    path = write_cfg(tmp_path, "bad.json", {
        "task": "trace", "domain": {"kind": "disk", "radius": 1.0},
        "params": {"T": 4.0, "eps": 4.1}})
    code = main(["trace", "--config", path])
    assert code == 2
    assert "params.eps" in capsys.readouterr().err


def test_unknown_task_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({"task": "explode", "domain": {}})


def test_determinism_byte_identical(tmp_path):
    doc = {"task": "orbits", "domain": {"kind": "disk", "radius": 1.0},
           "params": {"L_max": 5.5, "eps_search": 0.4}, "seed": 7}
    outs = []
    for run_dir in ("a", "b"):
        cfg = ExperimentConfig.from_json(dict(doc, out=str(tmp_path / run_dir)))
        assert run(cfg) == 0
        outs.append((tmp_path / run_dir / "orbits.csv").read_bytes())
    assert outs[0] == outs[1]


def test_spectrum_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("WEYLSCOPE_CACHE", str(tmp_path / "cache"))
    doc = {"task": "spectrum", "domain": {"kind": "disk", "radius": 1.0},
           "params": {"lambda_max": 20.0}}
    cfg = ExperimentConfig.from_json(dict(doc, out=str(tmp_path / "s1")))
    assert run(cfg) == 0
    cached = list((tmp_path / "cache").glob("spectrum_*.npz"))
    assert len(cached) == 1
    cfg2 = ExperimentConfig.from_json(dict(doc, out=str(tmp_path / "s2")))
    assert run(cfg2) == 0
    a = (tmp_path / "s1" / "spectrum.csv").read_bytes()
    b = (tmp_path / "s2" / "spectrum.csv").read_bytes()
    assert a == b


def test_report_aggregation_and_assert(tmp_path):
    art = tmp_path / "runs"
    art.mkdir()
    (art / "fit.json").write_text(json.dumps(
        {"alpha": 0.51, "stderr": 0.02, "pass": True}))
    (art / "analysis.json").write_text(json.dumps(
        {"frequency": 4.0, "exponent": 0.99, "pass": False}))
    cfg = ExperimentConfig.from_json({
        "task": "report", "out": str(tmp_path / "rep"),
        "params": {"artifacts": str(art)}})
    assert run(cfg) == 0
    md = (tmp_path / "rep" / "report.md").read_text()
    assert "alpha=0.51" in md and "**NO**" in md
    assert run(cfg, assert_pass=True) == 4


def test_report_missing_artifacts(tmp_path):
    cfg = ExperimentConfig.from_json({
        "task": "report", "out": str(tmp_path / "rep2"),
        "params": {"artifacts": str(tmp_path / "nothing")}})
    assert run(cfg) == 3


def test_rellich_task_disk(tmp_path):
    out = tmp_path / "rel"
    cfg = ExperimentConfig.from_json({
        "task": "rellich", "domain": {"kind": "disk", "radius": 1.0},
        "out": str(out),
        "params": {"count": 4, "accept_residual": 1e-10}})
    assert run(cfg) == 0
    doc = json.loads((out / "checks.json").read_text())
    assert doc["pass"] is True
    assert (out / "boundary_0000.csv").exists()
