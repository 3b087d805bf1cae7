import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from midlayer import cli, verify
from midlayer.ursell import CACHE_FILE

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("MIDLAYER_REGEN_GOLDEN") == "1"

CASES = {
    "graph_d3": ["graph", "--d", "3"],
    "graph_d3_iso": ["graph", "--d", "3", "--iso", "ii"],
    "count_d3": ["count", "--d", "3", "--coefficients"],
    "count_d2_family": ["count", "--d", "2", "--lambda", "1/2", "--family", "M_side"],
    "count_d2_csv": ["count", "--d", "2", "--coefficients", "--format", "csv"],
    "expand_d3": ["expand", "--d", "3", "--k-max", "3"],
    "expand_d3_closed_csv": ["expand", "--d", "3", "--source", "closed-form", "--format", "csv"],
    "kp_d3": ["kp-check", "--d", "3", "--max-size", "2"],
    "container_d3": ["container", "--d", "3", "--a", "4", "--b", "6"],
    "sample_d2": ["sample", "--d", "2", "--seed", "42", "--samples", "5"],
    "census_d2": ["census", "--d", "2"],
    "census_d2_csv": ["census", "--d", "2", "--format", "csv"],
    "estimate_d3": ["estimate", "--d", "3", "--t", "2", "--lambda", "1"],
    "verify_fast": ["verify"],
}


def run_cli(argv, tmp_path):
    out = tmp_path / "out.txt"
    code = cli.main(argv + ["--output", str(out)])
    return code, out.read_bytes() if out.exists() else b""


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden_output(name, tmp_path):
    code, data = run_cli(CASES[name], tmp_path)
    assert code == 0
    path = GOLDEN / (name + (".csv" if "csv" in name else ".json"))
    if REGEN:
        path.write_bytes(data)
    assert data == path.read_bytes()


def test_repeat_runs_are_byte_identical(tmp_path):
    argv = ["sample", "--d", "3", "--seed", "7", "--samples", "40"]
    assert run_cli(argv, tmp_path)[1] == run_cli(argv, tmp_path)[1]


def test_json_envelope(tmp_path):
    _, data = run_cli(["count", "--d", "2"], tmp_path)
    obj = json.loads(data)
    assert obj["schema_version"] == "1"
    assert obj["command"] == "count"
    assert obj["results"]["Z"] == "18"
    assert obj["results"]["Z_decimal"] == "18"
    assert "timing" not in obj and "wall_time_ms" not in obj["results"]


def test_timing_flag(tmp_path):
    _, data = run_cli(["count", "--d", "2", "--timing"], tmp_path)
    assert json.loads(data)["timing"]["wall_time_ms"] >= 0


def test_expand_values(tmp_path):
    _, data = run_cli(["expand", "--d", "3", "--source", "closed-form"], tmp_path)
    assert json.loads(data)["results"]["terms"] == ["5/4", "25/64"]


def test_csv_header(tmp_path):
    _, data = run_cli(["expand", "--d", "3", "--format", "csv"], tmp_path)
    assert data.decode().splitlines()[0] == "k,L_k,partial_sum"
    _, data = run_cli(["graph", "--d", "2", "--format", "csv"], tmp_path)
    assert data.decode().splitlines()[0] == "key,value"


def test_shards_flag(tmp_path):
    _, data = run_cli(["count", "--d", "3", "--shards", "16"], tmp_path)
    obj = json.loads(data)["results"]
    assert obj["shards"] == 16 and obj["Z"] == "6212"
    _, data = run_cli(["count", "--d", "3"], tmp_path)
    assert json.loads(data)["results"]["shards"] == 256


def test_sample_records_file(tmp_path):
    rec = tmp_path / "records.jsonl"
    code, data = run_cli(["sample", "--d", "2", "--seed", "3", "--samples", "20",
                          "--records", str(rec)], tmp_path)
    assert code == 0
    lines = rec.read_text().splitlines()
    assert len(lines) == 20
    assert {"index", "defect_side", "upper", "lower", "minority_side"} <= set(json.loads(lines[0]))
    assert "records" not in json.loads(data)["results"]


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nd = 3\nlambda = 1/2\ncoefficients = true\n")
    _, data = run_cli(["count", "--config", str(cfg)], tmp_path)
    res = json.loads(data)["results"]
    assert res["lambda"] == "1/2" and "coefficients" in res
    # flags on the command line win over the file
    _, data = run_cli(["count", "--config", str(cfg), "--lambda", "2"], tmp_path)
    assert json.loads(data)["results"]["lambda"] == "2"


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("d 3\n")
    assert cli.main(["count", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("argv,code", [
    (["count", "--d", "2"], 0),
    (["count", "--d", "2", "--lambda", "-1"], 2),
    (["count", "--d", "2", "--lambda", "abc"], 2),
    (["count"], 2),
    (["nonsense"], 2),
    (["count", "--d", "2", "--shards", "3"], 2),
    (["count", "--d", "5"], 3),
    (["sample", "--d", "4", "--samples", "1"], 3),
    (["expand", "--n", "4", "--k", "2"], 4),
    (["kp-check", "--n", "5", "--k", "2"], 4),
])
def test_exit_codes(argv, code, capsys):
    assert cli.main(argv) == code
    if code:
        err = json.loads(capsys.readouterr().err)
        assert set(err) == {"error", "message"}


def test_failed_check_exits_5(monkeypatch, capsys):
    bad = [("always_fails", "fast", lambda: {"passed": False})]
    monkeypatch.setattr(verify, "_CHECKS", bad)
    assert cli.main(["verify"]) == 5
    assert json.loads(capsys.readouterr().err)["error"] == "invariant"


def test_corrupted_cache_exits_6(tmp_path, monkeypatch, capsys):
    (tmp_path / CACHE_FILE).write_text("{broken")
    monkeypatch.setenv("MIDLAYER_CACHE_DIR", str(tmp_path))
    assert cli.main(["expand", "--d", "2"]) == 6
    assert json.loads(capsys.readouterr().err)["error"] == "cache"


def test_cache_written_by_cli(tmp_path, monkeypatch):
    monkeypatch.setenv("MIDLAYER_CACHE_DIR", str(tmp_path))
    assert cli.main(["expand", "--d", "2", "--k-max", "3", "--output",
                     str(tmp_path / "o.json")]) == 0
    entries = json.loads((tmp_path / CACHE_FILE).read_text())["entries"]
    assert entries


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "midlayer.cli", "graph", "--d", "2"],
                          capture_output=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["degree"] == {"lower": 2, "upper": 2}
