import json
import subprocess
import sys

import jsonschema
import pytest

from botnet_detect.cli import run
from botnet_detect.report import load_schema
from botnet_detect.synth import SynthConfig


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    d = tmp_path_factory.mktemp("scn")
    assert run(["simulate", "--seed", "7", "--output", str(d / "data.csv"), "--truth", str(d / "truth.txt")]) == 0
    return d


def _json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_simulate_detect_evaluate(scenario, tmp_path):
    rep = tmp_path / "r.json"
    assert run(["detect", "--input", str(scenario / "data.csv"), "--output", str(rep),
                "--t1", "auto", "--t2", "auto"]) == 0
    m = tmp_path / "m.json"
    assert run(["evaluate", "--report", str(rep), "--truth", str(scenario / "truth.txt"),
                "--input", str(scenario / "data.csv"), "--metrics-out", str(m)]) == 0
    metrics = _json(m)
    assert metrics["recall"] >= 0.9
    assert list(metrics)[0] == "recall"
    jsonschema.validate(_json(rep), load_schema())


def test_threshold_override_echo(scenario, tmp_path):
    rep = tmp_path / "r.json"
    assert run(["detect", "--input", str(scenario / "data.csv"), "--output", str(rep), "--t1", "13", "--t2", "12"]) == 0
    t = _json(rep)["thresholds"]
    assert t == {"t1_seconds": 13, "t1_source": "overridden", "t2_count": 12, "t2_source": "overridden"}


def test_pipeline_equals_composition(scenario, tmp_path):
    data, truth = str(scenario / "data.csv"), str(scenario / "truth.txt")
    out = tmp_path / "pipe"
    assert run(["pipeline", "--input", data, "--outdir", str(out), "--truth", truth]) == 0

    rep = str(tmp_path / "r.json")
    assert run(["detect", "--input", data, "--output", rep]) == 0
    assert run(["communities", "--report", rep]) == 0
    assert run(["amplify", "--input", data, "--report", rep, "--by", "account",
                "--pie", str(tmp_path / "pa.csv")]) == 0
    assert run(["amplify", "--input", data, "--report", rep, "--by", "domain",
                "--pie", str(tmp_path / "pd.csv")]) == 0
    assert run(["evaluate", "--report", rep, "--truth", truth, "--input", data]) == 0
    assert run(["export", "--report", rep, "--format", "gexf", "--output", str(tmp_path / "g.gexf")]) == 0
    assert run(["export", "--report", rep, "--format", "graphml", "--output", str(tmp_path / "g.graphml")]) == 0

    pairs = [("report.json", "r.json"), ("pie_accounts.csv", "pa.csv"), ("pie_domains.csv", "pd.csv"),
             ("graph.gexf", "g.gexf"), ("graph.graphml", "g.graphml")]
    for mine, theirs in pairs:
        assert (out / mine).read_bytes() == (tmp_path / theirs).read_bytes(), mine
    pie = (out / "pie_accounts.csv").read_text().splitlines()
    assert pie[1].startswith("amplified_author_")


def test_idempotent(scenario, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(["detect", "--input", str(scenario / "data.csv"), "--output", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep(scenario, tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sweep", "--input", str(scenario / "data.csv"), "--truth", str(scenario / "truth.txt"),
                "--t2-list", "10,12,15,30", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert [ln.split(",")[0] for ln in lines[1:]] == ["10", "12", "15", "30"]


def test_ingest_mapping(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("alice,bob,t1,2016-06-20T10:00:00Z\nalice,carol,t1,2016-06-20T10:00:05Z\n")
    mapping = tmp_path / "m.json"
    mapping.write_text(json.dumps({"columns": {"author": 1, "retweeter": 2, "tweet_id": 3, "timestamp": 4},
                                   "timestamp_format": "iso8601", "retweet_id": "synthesize", "header": False}))
    out = tmp_path / "c.csv"
    assert run(["ingest", "--input", str(raw), "--mapping", str(mapping), "--output", str(out)]) == 0
    assert out.read_text().splitlines() == [
        "tweet_id,retweet_id,author,retweeter,timestamp,urls",
        "t1,t1#0,alice,bob,1466416800,",
        "t1,t1#1,alice,carol,1466416805,",
    ]


def test_simulate_scenario_file(tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps(SynthConfig(n_groups=50, n_humans=100, bot_target_groups_per_botnet=5).to_dict()))
    assert run(["simulate", "--scenario", str(cfg), "--evasion", "split_communities",
                "--output", str(tmp_path / "d.csv")]) == 0


def test_exit_codes(scenario, tmp_path, capsys):
    data = str(scenario / "data.csv")
    assert run(["detect", "--input", data, "--output", str(tmp_path / "x.json"), "--bogus"]) == 2
    assert run(["detect", "--input", data, "--output", str(tmp_path / "x.json"),
                "--t1", "auto", "--t1-seconds", "4"]) == 2
    assert run(["detect", "--input", data, "--output", str(tmp_path / "x.json"), "--t2", "zero"]) == 2
    assert run(["detect", "--input", data, "--output", str(tmp_path / "x.json"), "--decile-fraction", "2"]) == 2
    assert run(["detect", "--input", str(tmp_path / "missing.csv"), "--output", str(tmp_path / "x.json")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("tweet_id,retweet_id,author,retweeter,timestamp,urls\nt1,r1,a,b,abc,\n")
    assert run(["detect", "--input", str(bad), "--output", str(tmp_path / "x.json")]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err
    scen = tmp_path / "scen.json"
    scen.write_text(json.dumps({"n_bots": 3, "n_botnets": 2}))
    assert run(["simulate", "--scenario", str(scen), "--output", str(tmp_path / "d.csv")]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "botnet_detect.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "botnet" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "botnet_detect.cli", "nosuch"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr
