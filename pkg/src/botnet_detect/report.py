"""Artifact emission: detection report JSON, Gephi graph files, pie-chart data.

Every writer is byte-stable: equal inputs give identical files.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterator

from . import __version__
from .amplify import AmplificationRanking
from .community import CommunityAssignment
from .detect import CoordGraph, Thresholds
from .errors import InputError

GEXF_NS = "http://www.gexf.net/1.2draft"
GEXF_VIZ_NS = "http://www.gexf.net/1.2draft/viz"
GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"
GRAPH_FORMATS = ("gexf", "graphml")
_NMTOKEN = re.compile(r"[\w.:-]+")
SCHEMA_PATH = Path(__file__).with_name("schemas") / "detection_report.schema.json"


@contextlib.contextmanager
def _text_sink(sink: str | Path | IO[str]) -> Iterator[IO[str]]:
    if isinstance(sink, (str, Path)):
        try:
            fh = open(sink, "w", encoding="utf-8", newline="\n")
        except OSError as exc:
            raise InputError(f"cannot write: {exc}", source=str(sink)) from None
        with fh:
            yield fh
    else:
        yield sink


# -- detection report ----------------------------------------------------------------


def ranking_to_dict(r: AmplificationRanking) -> dict:
    d: dict[str, Any] = {
        "kind": r.kind,
        "k": r.k,
        "share_basis": "top_k",
        "entries": [{"name": n, "count": c, "share": s} for n, c, s in r.entries],
    }
    if r.kind == "domain":
        d["skipped_urls"] = r.skipped_urls
    return d


def ranking_from_dict(d: dict) -> AmplificationRanking:
    return AmplificationRanking(
        d["kind"], [(e["name"], e["count"], e["share"]) for e in d["entries"]], d["k"], d.get("skipped_urls", 0)
    )


@dataclass
class DetectionReport:
    dataset: str
    thresholds: Thresholds
    parameters: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    tier1: list[str] = field(default_factory=list)
    tier2: list[str] = field(default_factory=list)
    suspect_group_ids: list[str] = field(default_factory=list)
    graph_tier: str = "both"
    graph_nodes: list[str] = field(default_factory=list)
    graph_edges: list[list] = field(default_factory=list)
    coordinated_group_ids: list[str] | None = None
    communities: dict | None = None
    amplification: dict = field(default_factory=lambda: {"accounts": None, "domains": None})
    metrics: dict | None = None
    tool: dict = field(default_factory=lambda: {"name": "botnet_detect", "version": __version__})

    def graph(self) -> CoordGraph:
        return CoordGraph.from_edges((a, b, w) for a, b, w in self.graph_edges)

    def community_assignment(self) -> CommunityAssignment | None:
        c = self.communities
        if c is None:
            return None
        return CommunityAssignment(dict(c["labels"]), c["modularity"], c["resolution"], c["seed"])

    def set_graph(self, g: CoordGraph, tier: str) -> None:
        self.graph_tier = tier
        self.graph_nodes = list(g.nodes)
        self.graph_edges = [[a, b, w] for a, b, w in g.edges()]

    def set_communities(self, c: CommunityAssignment | None) -> None:
        if c is None:
            self.communities = None
            return
        self.communities = {
            "resolution": c.resolution,
            "seed": c.seed,
            "modularity": c.modularity,
            "count": c.n_communities,
            "labels": {k: c.labels[k] for k in sorted(c.labels)},
        }

    def to_dict(self) -> dict:
        t = self.thresholds
        return {
            "tool": dict(self.tool),
            "dataset": self.dataset,
            "parameters": dict(self.parameters),
            "thresholds": {
                "t1_seconds": t.t1_seconds,
                "t1_source": t.t1_source,
                "t2_count": t.t2_count,
                "t2_source": t.t2_source,
            },
            "counts": dict(self.counts),
            "metrics": self.metrics,
            "tier1": sorted(self.tier1),
            "tier2": sorted(self.tier2),
            "suspect_group_ids": sorted(self.suspect_group_ids),
            "coordinated_group_ids": None if self.coordinated_group_ids is None else sorted(self.coordinated_group_ids),
            "graph": {"tier": self.graph_tier, "nodes": list(self.graph_nodes), "edges": [list(e) for e in self.graph_edges]},
            "communities": self.communities,
            "amplification": {
                "accounts": self.amplification.get("accounts"),
                "domains": self.amplification.get("domains"),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionReport":
        try:
            t = d["thresholds"]
            return cls(
                dataset=d["dataset"],
                thresholds=Thresholds(t["t1_seconds"], t["t2_count"], t["t1_source"], t["t2_source"]),
                parameters=d.get("parameters", {}),
                counts=d.get("counts", {}),
                tier1=list(d.get("tier1", [])),
                tier2=list(d.get("tier2", [])),
                suspect_group_ids=list(d.get("suspect_group_ids", [])),
                graph_tier=d.get("graph", {}).get("tier", "both"),
                graph_nodes=list(d.get("graph", {}).get("nodes", [])),
                graph_edges=[list(e) for e in d.get("graph", {}).get("edges", [])],
                coordinated_group_ids=d.get("coordinated_group_ids"),
                communities=d.get("communities"),
                amplification=dict(d.get("amplification") or {"accounts": None, "domains": None}),
                metrics=d.get("metrics"),
                tool=d.get("tool", {"name": "botnet_detect", "version": __version__}),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed detection report: missing or bad field {exc}") from None


def dumps_report(report: DetectionReport) -> str:
    return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"


def write_report(report: DetectionReport, sink: str | Path | IO[str]) -> None:
    with _text_sink(sink) as fh:
        fh.write(dumps_report(report))


def read_report(source: str | Path | IO[str]) -> DetectionReport:
    try:
        if isinstance(source, (str, Path)):
            with open(source, encoding="utf-8") as fh:
                data = json.load(fh)
        else:
            data = json.load(source)
    except OSError as exc:
        raise InputError(f"cannot read report: {exc}", source=str(source)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid report JSON: {exc}", line=exc.lineno, source=str(source)) from None
    return DetectionReport.from_dict(data)


def load_schema() -> dict:
    with open(SCHEMA_PATH, encoding="utf-8") as fh:
        return json.load(fh)


# -- graph export ---------------------------------------------------------------------


def _check_labels(g: CoordGraph, communities: CommunityAssignment) -> None:
    missing = [a for a in g.nodes if a not in communities.labels]
    if missing:
        raise InputError(f"{len(missing)} graph node(s) lack a community label, e.g. {missing[:5]}")


def _gexf_tree(g: CoordGraph, communities: CommunityAssignment) -> ET.Element:
    ET.register_namespace("", GEXF_NS)
    ET.register_namespace("viz", GEXF_VIZ_NS)
    ET.register_namespace("xsi", XSI_NS)
    q = lambda tag: f"{{{GEXF_NS}}}{tag}"  # noqa: E731
    root = ET.Element(q("gexf"), {
        "version": "1.2",
        f"{{{XSI_NS}}}schemaLocation": f"{GEXF_NS} {GEXF_NS}/gexf.xsd",
    })
    meta = ET.SubElement(root, q("meta"))
    ET.SubElement(meta, q("creator")).text = f"botnet_detect {__version__}"
    ET.SubElement(meta, q("description")).text = "highly coordinated account graph"
    graph = ET.SubElement(root, q("graph"), {"defaultedgetype": "undirected", "mode": "static"})
    attrs = ET.SubElement(graph, q("attributes"), {"class": "node", "mode": "static"})
    ET.SubElement(attrs, q("attribute"), {"id": "community", "title": "community", "type": "integer"})
    ET.SubElement(attrs, q("attribute"), {"id": "degree", "title": "degree", "type": "integer"})
    nodes = ET.SubElement(graph, q("nodes"), {"count": str(g.n_nodes)})
    for name, deg in zip(g.nodes, g.degree.tolist()):
        node = ET.SubElement(nodes, q("node"), {"id": name, "label": name})
        values = ET.SubElement(node, q("attvalues"))
        ET.SubElement(values, q("attvalue"), {"for": "community", "value": str(communities.labels[name])})
        ET.SubElement(values, q("attvalue"), {"for": "degree", "value": str(deg)})
        ET.SubElement(node, f"{{{GEXF_VIZ_NS}}}size", {"value": str(deg)})
    edges = ET.SubElement(graph, q("edges"), {"count": str(g.n_edges)})
    for i, (a, b, w) in enumerate(g.edges()):
        ET.SubElement(edges, q("edge"), {"id": str(i), "source": a, "target": b, "weight": str(w)})
    return root


def _graphml_tree(g: CoordGraph, communities: CommunityAssignment) -> ET.Element:
    ET.register_namespace("", GRAPHML_NS)
    ET.register_namespace("xsi", XSI_NS)
    q = lambda tag: f"{{{GRAPHML_NS}}}{tag}"  # noqa: E731
    root = ET.Element(q("graphml"), {
        f"{{{XSI_NS}}}schemaLocation": f"{GRAPHML_NS} {GRAPHML_NS}/1.0/graphml.xsd",
    })
    keys = (
        ("d0", "node", "community", "int"),
        ("d1", "node", "degree", "int"),
        ("d2", "edge", "weight", "int"),
        ("d3", "node", "label", "string"),
    )
    for key, scope, name, kind in keys:
        ET.SubElement(root, q("key"), {"id": key, "for": scope, "attr.name": name, "attr.type": kind})
    # GraphML ids are NMTOKENs; fall back to positional ids if any name is not one
    ids = list(g.nodes) if all(_NMTOKEN.fullmatch(a) for a in g.nodes) else [f"n{i}" for i in range(g.n_nodes)]
    graph = ET.SubElement(root, q("graph"), {"id": "G", "edgedefault": "undirected"})
    for node_id, name, deg in zip(ids, g.nodes, g.degree.tolist()):
        node = ET.SubElement(graph, q("node"), {"id": node_id})
        ET.SubElement(node, q("data"), {"key": "d0"}).text = str(communities.labels[name])
        ET.SubElement(node, q("data"), {"key": "d1"}).text = str(deg)
        ET.SubElement(node, q("data"), {"key": "d3"}).text = name
    for i, (s, d, w) in enumerate(zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist())):
        edge = ET.SubElement(graph, q("edge"), {"id": f"e{i}", "source": ids[s], "target": ids[d]})
        ET.SubElement(edge, q("data"), {"key": "d2"}).text = str(w)
    return root


def graph_to_xml(g: CoordGraph, communities: CommunityAssignment, fmt: str = "gexf") -> bytes:
    if fmt not in GRAPH_FORMATS:
        raise InputError(f"unknown graph format {fmt!r}; expected one of {GRAPH_FORMATS}")
    _check_labels(g, communities)
    root = _gexf_tree(g, communities) if fmt == "gexf" else _graphml_tree(g, communities)
    ET.indent(root)
    return ET.tostring(root, encoding="UTF-8", xml_declaration=True) + b"\n"


def export_graph(g: CoordGraph, communities: CommunityAssignment, fmt: str, sink: str | Path | IO[bytes]) -> None:
    """Write ``g`` with per-node ``community``/``degree`` and per-edge ``weight``."""
    data = graph_to_xml(g, communities, fmt)
    if isinstance(sink, (str, Path)):
        try:
            Path(sink).write_bytes(data)
        except OSError as exc:
            raise InputError(f"cannot write: {exc}", source=str(sink)) from None
    else:
        sink.write(data)


# -- pie data ------------------------------------------------------------------------


def emit_pie_data(r: AmplificationRanking, sink: str | Path | IO[str]) -> None:
    with _text_sink(sink) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("name", "count", "share"))
        for name, count, share in r.entries:
            writer.writerow((name, count, f"{share:.4f}"))


def pie_data_text(r: AmplificationRanking) -> str:
    buf = io.StringIO()
    emit_pie_data(r, buf)
    return buf.getvalue()
