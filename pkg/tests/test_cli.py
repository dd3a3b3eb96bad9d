import csv
import json

import pytest
import yaml

from hopflink import cli, linking
from hopflink.ruelle import QuadratureError


def _cfg(tmp_path, **d):
    d.setdefault("output", {"dir": str(tmp_path / "out")})
    return cli.ExperimentConfig.from_dict(d)


@pytest.mark.parametrize("bad", [
    [],
    {"experiment": "nope"},
    {"experiment": "identity-suite", "extra": 1},
    {"experiment": "identity-suite", "seed": -1},
    {"experiment": "identity-suite", "seed": True},
    {"experiment": "identity-suite", "params": {"n_pts": 10}},
    {"experiment": "identity-suite", "params": {"n_points": 0}},
    {"experiment": "identity-suite", "params": {"n_points": 2.5}},
    {"experiment": "identity-suite", "tolerances": {"pointwise": -1}},
    {"experiment": "identity-suite", "output": {"where": "x"}},
    {"experiment": "s3xs3-linking", "params": {"system": "other"}},
    {"experiment": "gv-family", "params": {"family": "config"}},
    {"experiment": "hodge-selftest", "params": {"dims": [4]}},
])
def test_config_rejected(bad):
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig.from_dict(bad)


def test_defaults_filled():
    c = cli.ExperimentConfig.from_dict({"experiment": "s3xs3-linking"})
    assert c.params["t_end"] == 1000 and c.params["n_samples"] == 10000
    assert c.tolerances["rel"] == 0.02 and c.seed == 0


def test_identity_run_and_outputs(tmp_path):
    code, s = cli.run(_cfg(tmp_path, experiment="identity-suite", params={"n_points": 50}))
    assert code == cli.EXIT_OK and s["pass"] is True
    for k in ("schema_version", "experiment", "seed", "params", "estimate", "target",
              "tolerance", "pass", "checks", "details"):
        assert k in s
    assert s["schema_version"] == cli.SCHEMA_VERSION
    on_disk = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert on_disk == json.loads(json.dumps(s))
    rows = list(csv.reader(open(tmp_path / "out" / "samples.csv")))
    assert len(rows) >= 2


def test_failed_comparison_exit_1(tmp_path):
    code, s = cli.run(_cfg(tmp_path, experiment="s3xs3-linking",
                           params={"t_end": 20.0, "n_samples": 30}, tolerances={"rel": 1e-12}))
    assert code == cli.EXIT_FAIL and s["pass"] is False


def test_s3xs3_deterministic(tmp_path):
    d = dict(experiment="s3xs3-linking", seed=3, params={"t_end": 30.0, "n_samples": 40, "a": 1, "b": 0},
             tolerances={"rel": 0.5})
    _, s1 = cli.run(_cfg(tmp_path / "a", **d))
    _, s2 = cli.run(_cfg(tmp_path / "b", **d))
    assert s1 == s2
    rows = list(csv.reader(open(tmp_path / "a" / "out" / "samples.csv")))
    assert len(rows) == 41


@pytest.mark.parametrize("exc,code", [
    (linking.TooManyDegenerateError("x"), cli.EXIT_DEGENERATE),
    (QuadratureError("x", [1.0, 2.0]), cli.EXIT_QUADRATURE),
    (FloatingPointError("x"), cli.EXIT_NUMERIC),
    (cli.ConfigError("x"), cli.EXIT_CONFIG),
])
def test_exit_codes(tmp_path, monkeypatch, exc, code):
    def boom(cfg):
        raise exc
    monkeypatch.setitem(cli.RUNNERS, "identity-suite", boom)
    assert cli.run(_cfg(tmp_path, experiment="identity-suite")) == (code, None)


def test_main_run_and_bad_file(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"experiment": "hodge-selftest", "params": {"band": 3, "n_forms": 3}}))
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o"), "--workers", "1"]) == 0
    line = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert line["experiment"] == "hodge-selftest" and line["pass"] is True
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == cli.EXIT_CONFIG
    p.write_text("experiment: [unclosed")
    assert cli.main(["run", str(p)]) == cli.EXIT_CONFIG


def test_list_experiments(capsys):
    assert cli.main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    for name in cli.EXPERIMENTS:
        assert name in out
    assert "HOPFLINK_WORKERS" in out


def test_workers_env(monkeypatch):
    monkeypatch.setenv("HOPFLINK_WORKERS", "3")
    assert linking.default_workers() == 3
    monkeypatch.delenv("HOPFLINK_WORKERS")
    assert linking.default_workers() == 1


def test_selftest(tmp_path, capsys):
    assert cli.main(["selftest", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.count("pass") == len(cli.SELFTEST)
