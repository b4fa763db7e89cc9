import json
import os
import subprocess
import sys

import pytest

from ehglue.config import ConfigError, RunConfig, parse_config_file
from ehglue.report import Report, canonical_json, format_float, write_csv


def run_cli(args, env_extra=None, cwd=None):
    env = dict(os.environ)
    env["PYTHONPATH"] = os.pathsep.join(
        [os.path.join(os.path.dirname(__file__), "..", "src"),
         env.get("PYTHONPATH", "")])
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "ehglue.cli", *args],
                          capture_output=True, text=True, env=env, cwd=cwd)


def test_canonical_json_is_sorted_and_fixed_format():
    text = canonical_json({"b": 1.0 / 3.0, "a": [1, 2.5], "c": {"x": True}})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert format_float(1.0 / 3.0) in text
    assert format_float(1.0 / 3.0) == "0.33333333333333331"


def test_report_budget_pairing():
    rep = Report("demo", {})
    rep.add("x", 1.0, budget=0.1)
    rep.add("y", 2.0)
    assert rep.budgets["x"] == 0.1
    assert rep.budgets["y"] == "exact"
    rep.add("z", 1.05, expected=1.0, tolerance=0.1)
    assert rep.passes["z"]
    assert rep.all_passed


def test_csv_schema(tmp_path):
    path = str(tmp_path / "series.csv")
    write_csv(path, ["t", "epsilon", "pred_sup_rm", "ric_proxy"],
              [[-1e4, 0.025, 3.0e4, 1e-3]])
    lines = open(path).read().splitlines()
    assert lines[0] == "t,epsilon,pred_sup_rm,ric_proxy"
    assert len(lines) == 2


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\neps = 0.05\ncutoff = 16\n")
    cfg = RunConfig().apply_mapping(parse_config_file(str(path)))
    assert cfg.eps == 0.05
    assert cfg.cutoff == 16
    with pytest.raises(ConfigError):
        RunConfig().apply_mapping({"nonsense": "1"})
    with pytest.raises(ConfigError):
        RunConfig().apply_mapping({"cutoff": "many"})


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(eps=-1.0).validate()
    with pytest.raises(ConfigError):
        RunConfig(t_min=-1.0, t_max=-2.0).validate()


def test_cli_rejects_malformed_flag(tmp_path):
    res = run_cli(["omega", "--cutoff", "-3",
                   "--out", str(tmp_path / "r.json")])
    assert res.returncode == 2
    assert not (tmp_path / "r.json").exists()


def test_cli_rejects_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("volume = 11\n")
    res = run_cli(["omega", "--config", str(cfg)])
    assert res.returncode == 2


def test_cli_omega_runs_and_passes(tmp_path):
    out = tmp_path / "omega.json"
    res = run_cli(["omega", "--cutoff", "12", "--out", str(out)])
    assert res.returncode == 0, res.stderr
    payload = json.loads(out.read_text())
    assert payload["all_passed"]
    assert abs(payload["results"]["extrapolated"] - 7.70) < 0.05


def test_cli_report_merge(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert run_cli(["omega", "--cutoff", "8", "--out", str(out1)]).returncode == 0
    assert run_cli(["heat", "--out", str(out2)]).returncode == 0
    merged = tmp_path / "merged.json"
    res = run_cli(["report", str(out1), str(out2), "--out", str(merged)])
    assert res.returncode == 0
    payload = json.loads(merged.read_text())
    assert set(payload["suites"]) == {"omega", "heat"}
    assert payload["all_passed"]


def test_cli_config_file_respected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("cutoff = 8\n")
    out = tmp_path / "omega.json"
    res = run_cli(["omega", "--config", str(cfg), "--out", str(out)])
    assert res.returncode == 0
    payload = json.loads(out.read_text())
    assert payload["config"]["cutoff"] == 8


def test_reports_byte_identical_across_thread_counts(tmp_path):
    """Rerunning any suite with a different thread budget gives the same
    bytes (acceptance determinism gate, exercised on two fast suites)."""
    for task, extra in (("omega", ["--cutoff", "12"]), ("heat", [])):
        blobs = []
        out = tmp_path / f"{task}.json"
        for threads in ("1", "4"):
            res = run_cli([task, *extra, "--out", str(out),
                           "--threads", threads],
                          env_extra={"OMP_NUM_THREADS": threads,
                                     "OPENBLAS_NUM_THREADS": threads})
            assert res.returncode == 0, res.stderr
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1], f"{task} report depends on threads"


def test_cache_regeneration_bit_identical(tmp_path):
    from ehglue.lattice import BackgroundCache, BackgroundField
    cache_dir = tmp_path / "cache"
    cache = BackgroundCache(str(cache_dir))
    BackgroundField(4, n0=1, degree=8, cache=cache)
    files = sorted(os.listdir(cache_dir))
    first = {f: (cache_dir / f).read_bytes() for f in files}
    for f in files:
        (cache_dir / f).unlink()
    BackgroundField(4, n0=1, degree=8, cache=cache)
    second = {f: (cache_dir / f).read_bytes() for f in sorted(os.listdir(cache_dir))}
    assert first == second
