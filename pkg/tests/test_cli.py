import json
import subprocess
import sys

import pytest
import yaml

from artifact.cli import DEFAULTS, ValidationError, build_config


def run(args, tmp_path, config=None):
    cmd = [sys.executable, "-m", "artifact.cli", *args, "--out", str(tmp_path / "out")]
    if config is not None:
        p = tmp_path / "cfg.yaml"
        p.write_text(yaml.safe_dump(config))
        cmd += ["--config", str(p)]
    return subprocess.run(cmd, capture_output=True, text=True, timeout=600)


def outputs(tmp_path):
    d = tmp_path / "out"
    return {p.name: p.read_text() for p in sorted(d.iterdir())} if d.exists() else {}


def test_diagram_edge_count(tmp_path):
    r = run(["diagram"], tmp_path, {"family": "cf-dihedral", "c": [5], "levels": 1})
    assert r.returncode == 0, r.stderr
    d = json.loads(outputs(tmp_path)["diagram.json"])
    assert len(d["levels"][0]["edges"]) == 11


def test_growth_unfragmented_dihedral(tmp_path):
    r = run(["growth", "--radius", "16"], tmp_path, {"family": "cf-dihedral", "c": [2, 3]})
    assert r.returncode == 0, r.stderr
    rep = json.loads(outputs(tmp_path)["growth.json"])
    assert rep["gamma"] == [2 * R + 1 for R in range(17)]
    assert rep["certified"]


def test_levels_zero_rejected(tmp_path):
    r = run(["diagram", "--levels", "0"], tmp_path)
    assert r.returncode == 1
    err = json.loads(r.stderr.strip().splitlines()[-1])
    assert err["error"] == "validation" and err["exit"] == 1
    assert outputs(tmp_path) == {}


def test_fragmented_growth_unstable(tmp_path):
    r = run(["growth", "--radius", "6", "--fragmented", "--params", "13", "--family", "one-three"], tmp_path)
    assert r.returncode == 3, r.stderr
    assert json.loads(r.stderr.strip().splitlines()[-1])["error"] == "unstable"
    assert "growth.csv" in outputs(tmp_path)


def test_unknown_key(tmp_path):
    r = run(["diagram"], tmp_path, {"colour": 3})
    assert r.returncode == 1
    assert "unknown config keys" in r.stderr


def test_bad_usage_is_validation(tmp_path):
    r = run(["diagram", "--levels", "x"], tmp_path)
    assert r.returncode == 1


def test_precedence(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"levels": 4, "seed": 9}))
    c = build_config(str(p), {"levels": 7, "seed": None})
    assert c.levels == 7 and c.seed == 9
    assert build_config(None, {}).levels == DEFAULTS["levels"]


def test_family_switch_default_params(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"family": "one-three"}))
    assert build_config(str(p), {}).params == "13"


def test_json_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"w": "1313", "family": "one-three"}))
    assert build_config(str(p), {}).params == "1313"


@pytest.mark.parametrize("cfg", [{"family": "nope"}, {"c": [0, 2]}, {"threads": 0}, {"family": "cf-dihedral", "c": [2, 2], "fragmented": True}])
def test_invalid_configs(tmp_path, cfg):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(cfg))
    with pytest.raises(ValidationError):
        build_config(str(p), {})


def test_finite_levels_bound(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"c": [2, 3, 2], "periodic": False, "levels": 5}))
    with pytest.raises(ValidationError):
        build_config(str(p), {})


@pytest.mark.parametrize(
    "args",
    [
        ["inflate", "--levels", "4"],
        ["check", "--levels", "5"],
        ["automaton", "--levels", "3"],
        ["orbit", "--depth", "6", "--radius", "8"],
        ["traverses", "--length", "16", "--levels", "6"],
        ["traverses", "--length", "8", "--levels", "1"],
        ["traverses", "--family", "one-three", "--params", "13", "--fragmented", "--length", "8", "--levels", "3"],
        ["oracle", "--prefix", "2,3,2,3"],
    ],
)
def test_subcommands_succeed(tmp_path, args):
    r = run(args, tmp_path)
    assert r.returncode == 0, r.stderr
    assert outputs(tmp_path)
