"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the summary lines are printed at
the end of the session) or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import json
import random
import subprocess
import sys
import textwrap
import time
import xml.etree.ElementTree as ET

import pytest
import xmlschema

from botnet_detect.cli import run
from botnet_detect.community import louvain
from botnet_detect.detect import (
    CoordGraph,
    DetectionParams,
    classify_bots,
    classify_from_evidence,
    estimate_threshold1,
    flag_suspect_groups,
    gather_evidence,
)
from botnet_detect.errors import EstimationError
from botnet_detect.evaluate import Metrics, evaluate
from botnet_detect.ingest import TweetGroup, group_tweets
from botnet_detect.synth import SynthConfig, botnet_members, generate

from conftest import SCHEMA_DIR
from oracles import best_partition, brute_modularity, dense_adjacency, naive_classify, random_records

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


# 1 -----------------------------------------------------------------------------------


def test_criterion_1_metric_arithmetic():
    a = Metrics(tp=181, fp=5279, fn=132, tn=0)
    b = Metrics(tp=158, fp=4086, fn=155, tn=0)
    p, r, f = 100 * a.precision, 100 * a.recall, 100 * b.f1
    ok = abs(p - 3.31) <= 0.01 and abs(r - 57.83) <= 0.02 and abs(f - 6.93) <= 0.05
    record(1, ok, f"precision {p:.4f}% recall {r:.4f}% f1 {f:.4f}%")


# 2 -----------------------------------------------------------------------------------


def test_criterion_2_threshold1():
    groups = [TweetGroup(f"g{g:03d}", "a", (("x", "u", 0), ("y", "v", g))) for g in range(1, 101)]
    t1 = estimate_threshold1(groups, DetectionParams(decile_fraction=0.10))
    flagged = flag_suspect_groups(groups, t1)
    record(2, t1 == 10 and len(flagged) == 10, f"t1={t1}s flagged={len(flagged)}")


# 3 -----------------------------------------------------------------------------------


def test_criterion_3_bruteforce_oracle():
    start = time.perf_counter()
    mismatches, compared = [], 0
    for seed in range(200):
        records = random_records(seed, max_records=50)
        groups = group_tweets(records)
        try:
            naive = naive_classify(records)
        except (AssertionError, IndexError):
            naive = None
        try:
            report = classify_bots(groups)
            ev = gather_evidence(groups)
        except EstimationError:
            report = None
        if naive is None or report is None:
            if (naive is None) != (report is None):
                mismatches.append(seed)
            continue
        compared += 1
        same = (
            report.tier1 == naive["tier1"]
            and report.tier2 == naive["tier2"]
            and ev.suspect_projection.weights() == naive["suspect_weights"]
            and ev.full_projection.weights() == naive["all_weights"]
            and report.suspect_graph.weights() == {k: w for k, w in naive["suspect_weights"].items() if w >= naive["t2"]}
            and report.coordinated_graph.weights() == {k: w for k, w in naive["all_weights"].items() if w >= naive["t2"]}
        )
        if not same:
            mismatches.append(seed)
    elapsed = time.perf_counter() - start
    record(3, not mismatches and elapsed < 10,
           f"{compared} instances compared exactly, mismatching seeds {mismatches}, {elapsed:.2f}s")


# 4 -----------------------------------------------------------------------------------


def test_criterion_4_planted_botnets():
    start = time.perf_counter()
    config = SynthConfig()
    records, truth = generate(config)
    groups = group_tweets(records)
    tiers = classify_bots(groups)
    universe = {r.retweeter for r in records}
    recall = evaluate(tiers.predicted, truth, universe).recall
    communities = louvain(tiers.coordinated_graph, seed=0)
    single = all(
        len({communities.labels.get(b) for b in net}) == 1 and None not in {communities.labels.get(b) for b in net}
        for net in botnet_members(config)
    )

    split = SynthConfig(evasion_mode="split_communities")
    s_records, s_truth = generate(split)
    s_tiers = classify_bots(group_tweets(s_records))
    s_recall = evaluate(s_tiers.tier1, s_truth, {r.retweeter for r in s_records}).recall
    elapsed = time.perf_counter() - start
    ok = recall >= 0.90 and single and s_recall < 0.5 and elapsed < 30
    record(4, ok, f"recall {recall:.3f} (t1={tiers.thresholds.t1_seconds}s t2={tiers.thresholds.t2_count}), "
                  f"botnets in single communities: {single}, split-mode tier1 recall {s_recall:.3f}, {elapsed:.2f}s")


# 5 -----------------------------------------------------------------------------------


def test_criterion_5_louvain_oracle():
    triangles = [("a", "b", 1), ("b", "c", 1), ("a", "c", 1), ("d", "e", 1), ("e", "f", 1), ("d", "f", 1)]
    left, right = [f"l{i}" for i in range(4)], [f"r{i}" for i in range(4)]
    barbell = [(x, y, 1) for side in (left, right) for x, y in itertools.combinations(side, 2)] + [("l0", "r0", 1)]
    details, ok = [], True
    for name, edges, expected in (
        ("triangles", triangles, [["a", "b", "c"], ["d", "e", "f"]]),
        ("barbell", barbell, [left, right]),
    ):
        g = CoordGraph.from_edges(edges)
        best_q, _ = best_partition(dense_adjacency(list(g.nodes), edges))
        ca = louvain(g)
        diff = abs(ca.modularity - best_q)
        ok &= diff <= 1e-12 and sorted(ca.members()) == expected
        details.append(f"{name} Q={ca.modularity!r} |dQ|={diff:.1e}")
        if name == "triangles":
            ok &= ca.modularity == 0.5
    record(5, ok, ", ".join(details))


# 6 -----------------------------------------------------------------------------------


def test_criterion_6_monotonicity():
    start = time.perf_counter()
    rnd = random.Random(2024)
    violations, checked = [], 0
    for i in range(50):
        n_groups = rnd.randint(80, 300)
        config = SynthConfig(
            n_humans=rnd.randint(200, 800),
            n_bots=rnd.randint(4, 16),
            n_botnets=2,
            n_groups=n_groups,
            human_retweets_per_group=(1, rnd.randint(5, 20)),
            bot_target_groups_per_botnet=rnd.randint(5, n_groups // 4),
            bot_reaction_delay_max=rnd.randint(1, 30),
            evasion_mode=rnd.choice(["none", "relaxed_timing", "split_communities"]),
            seed=i,
        )
        groups = group_tweets(generate(config)[0])
        ev = gather_evidence(groups)
        sizes = [len(classify_from_evidence(ev, DetectionParams(t2_override=t2)).tier1) for t2 in range(1, 41)]
        gaps = sorted({g.first_gap() for g in groups if g.size >= 2})
        flagged = [len(flag_suspect_groups(groups, t1)) for t1 in [0] + gaps[:: max(1, len(gaps) // 60)]]
        checked += 1
        if any(a < b for a, b in zip(sizes, sizes[1:])) or any(a > b for a, b in zip(flagged, flagged[1:])):
            violations.append(i)
    elapsed = time.perf_counter() - start
    record(6, not violations and elapsed < 30, f"{checked} instances, violations {violations}, {elapsed:.2f}s")


# 7 -----------------------------------------------------------------------------------


def test_criterion_7_export_validity(tmp_path):
    data, truth, out = tmp_path / "data.csv", tmp_path / "truth.txt", tmp_path / "out"
    assert run(["simulate", "--output", str(data), "--truth", str(truth)]) == 0
    assert run(["pipeline", "--input", str(data), "--outdir", str(out), "--truth", str(truth)]) == 0
    report = json.loads((out / "report.json").read_text())
    edges = report["graph"]["edges"]
    labels = report["communities"]["labels"]
    problems = []

    gexf = out / "graph.gexf"
    graphml = out / "graph.graphml"
    xmlschema.XMLSchema(str(SCHEMA_DIR / "gexf.xsd")).validate(str(gexf))
    xmlschema.XMLSchema(str(SCHEMA_DIR / "graphml.xsd")).validate(str(graphml))

    ns_g, ns_v = "{http://www.gexf.net/1.2draft}", "{http://www.gexf.net/1.2draft/viz}"
    root = ET.parse(gexf).getroot()
    xml_edges = [(e.get("source"), e.get("target"), int(e.get("weight"))) for e in root.iter(ns_g + "edge")]
    degree: dict[str, int] = {}
    for a, b, _ in xml_edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    node_comm = {}
    for node in root.iter(ns_g + "node"):
        vals = {v.get("for"): int(v.get("value")) for v in node.iter(ns_g + "attvalue")}
        name = node.get("id")
        node_comm[name] = vals["community"]
        if vals["degree"] != degree.get(name) or float(node.find(ns_v + "size").get("value")) != degree.get(name):
            problems.append(f"gexf degree {name}")
    if sorted(map(list, xml_edges)) != sorted(edges):
        problems.append("gexf edges differ from report")
    if node_comm != labels:
        problems.append("gexf communities differ from report")

    ns_m = "{http://graphml.graphdrawing.org/xmlns}"
    groot = ET.parse(graphml).getroot()
    ids = {}
    for node in groot.iter(ns_m + "node"):
        d = {x.get("key"): x.text for x in node.iter(ns_m + "data")}
        ids[node.get("id")] = d["d3"]
        if int(d["d1"]) != degree.get(d["d3"]) or int(d["d0"]) != labels[d["d3"]]:
            problems.append(f"graphml node {d['d3']}")
    g_edges = sorted((ids[e.get("source")], ids[e.get("target")]) for e in groot.iter(ns_m + "edge"))
    if g_edges != sorted((a, b) for a, b, _ in edges):
        problems.append("graphml edges differ")

    # modularity recomputed from the exported file with the oracle formula
    nodes = sorted(node_comm)
    q = brute_modularity(dense_adjacency(nodes, xml_edges), [node_comm[n] for n in nodes])
    if abs(q - report["communities"]["modularity"]) > 1e-12:
        problems.append(f"modularity {q} vs {report['communities']['modularity']}")
    record(7, not problems, f"{len(nodes)} nodes, {len(xml_edges)} edges, schema-valid, recomputed Q={q:.6f}; "
                            f"problems {problems}")


# 8 -----------------------------------------------------------------------------------

_PIPELINE_RUN = textwrap.dedent(
    """
    import resource, sys, time
    from botnet_detect.cli import run
    t = time.perf_counter()
    code = run(sys.argv[1:])
    print(code, time.perf_counter() - t, resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)
    """
)


@pytest.mark.slow
def test_criterion_8_throughput(tmp_path):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps({"n_humans": 50000, "n_groups": 72000, "human_retweets_per_group": [1, 27], "seed": 1}))
    data, truth = tmp_path / "data.csv", tmp_path / "truth.txt"
    assert run(["simulate", "--scenario", str(scenario), "--output", str(data), "--truth", str(truth)]) == 0
    with open(data, "rb") as fh:
        n_records = sum(1 for _ in fh) - 1

    runs = []
    for name in ("a", "b"):
        proc = subprocess.run(
            [sys.executable, "-c", _PIPELINE_RUN, "pipeline", "--input", str(data), "--outdir", str(tmp_path / name),
             "--truth", str(truth)],
            capture_output=True, text=True, check=True,
        )
        code, seconds, rss_kb = proc.stdout.split()
        runs.append((int(code), float(seconds), int(rss_kb) / 1024))
    identical = all(
        (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        for f in ("report.json", "graph.gexf", "graph.graphml", "pie_accounts.csv", "pie_domains.csv")
    )
    worst_s = max(r[1] for r in runs)
    worst_mb = max(r[2] for r in runs)
    ok = n_records >= 1_000_000 and all(r[0] == 0 for r in runs) and worst_s < 120 and worst_mb < 4096 and identical
    record(8, ok, f"{n_records} records, pipeline {worst_s:.1f}s, peak RSS {worst_mb:.0f} MB, "
                  f"byte-identical reruns: {identical}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
