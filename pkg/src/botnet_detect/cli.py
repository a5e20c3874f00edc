"""Command-line entry point.

Stages exchange files: canonical CSV in, a detection report JSON that each
later stage reads and extends, and the graph / pie-chart / sweep outputs.
``pipeline`` runs the stages in order through the same functions.

Exit codes: 0 success, 1 input error, 2 configuration or usage error.
The log level can be set with ``BOTNET_DETECT_LOG_LEVEL``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, kernels
from .amplify import SCOPES, amplified_accounts, amplified_domains, coordinated_group_ids
from .community import louvain
from .detect import DetectionParams, classify_bots
from .errors import ConfigError, DetectError, InputError
from .evaluate import evaluate, read_account_list, sweep_t2, write_sweep_csv
from .ingest import ColumnMapping, group_tweets, parse_mapped, read_canonical, save_canonical
from .report import (
    GRAPH_FORMATS,
    DetectionReport,
    emit_pie_data,
    export_graph,
    ranking_from_dict,
    ranking_to_dict,
    read_report,
    write_report,
)
from .synth import SynthConfig, write_scenario

log = logging.getLogger("botnet_detect")

TIERS = ("1", "2", "both")


AUTO = "auto"


def _auto_or_positive(value: str) -> int | str:
    # "auto" stays a string so argparse sees the flag as given (mutual exclusion)
    if value == AUTO:
        return AUTO
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a positive integer, got {value!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _positive_int(value: str) -> int:
    n = _auto_or_positive(value)
    if n == AUTO:
        raise argparse.ArgumentTypeError("'auto' is not allowed here")
    return n


def _int_list(value: str) -> list[int]:
    try:
        out = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None
    if not out or any(v <= 0 for v in out):
        raise argparse.ArgumentTypeError("t2 values must be positive integers")
    return out


# -- stages -------------------------------------------------------------------------


def stage_detect(records, params: DetectionParams, tier: str, label: str) -> DetectionReport:
    groups = group_tweets(records)
    tiers = classify_bots(groups, params)
    graph = tiers.graph_for(tier)
    report = DetectionReport(
        dataset=label,
        thresholds=tiers.thresholds,
        parameters={
            "detection": {
                "decile_fraction": params.decile_fraction,
                "half_fraction": params.half_fraction,
                "t1_override": params.t1_override,
                "t2_override": params.t2_override,
                "max_group_pair_size": params.max_group_pair_size,
                "tier": tier,
            },
        },
        counts={
            "records": len(records),
            "groups": len(groups),
            "eligible_groups": tiers.eligible_groups,
            "suspect_groups": len(tiers.flagged_group_ids),
            "accounts": len({r.retweeter for r in records}),
            "tier1": len(tiers.tier1),
            "tier2": len(tiers.tier2),
            "graph_nodes": graph.n_nodes,
            "graph_edges": graph.n_edges,
        },
        tier1=sorted(tiers.tier1),
        tier2=sorted(tiers.tier2),
        suspect_group_ids=sorted(tiers.flagged_group_ids),
    )
    report.set_graph(graph, tier)
    log.debug("kernel backend: %s", kernels.BACKEND)
    log.info(
        "t1=%ds (%s) t2=%d (%s); %d suspect groups; tier1=%d tier2=%d",
        tiers.thresholds.t1_seconds, tiers.thresholds.t1_source,
        tiers.thresholds.t2_count, tiers.thresholds.t2_source,
        len(tiers.flagged_group_ids), len(tiers.tier1), len(tiers.tier2),
    )
    return report


def stage_communities(report: DetectionReport, resolution: float, seed: int) -> DetectionReport:
    graph = report.graph()
    if graph.n_edges == 0:
        log.warning("highly coordinated graph is empty; no communities")
        report.set_communities(None)
        return report
    result = louvain(graph, resolution=resolution, seed=seed)
    report.set_communities(result)
    log.info("%d communities, modularity %.6f", result.n_communities, result.modularity)
    return report


def stage_amplify(report: DetectionReport, records, by: str, top: int, scope: str) -> DetectionReport:
    groups = group_tweets(records)
    ids = coordinated_group_ids(groups, report.suspect_group_ids, report.graph(), scope)
    report.coordinated_group_ids = sorted(ids)
    report.counts["coordinated_groups"] = len(ids)
    report.parameters["amplify"] = {"top": top, "scope": scope}
    if by == "account":
        ranking = amplified_accounts(groups, ids, top)
        report.amplification["accounts"] = ranking_to_dict(ranking)
    else:
        ranking = amplified_domains(records, ids, top)
        report.amplification["domains"] = ranking_to_dict(ranking)
        if ranking.skipped_urls:
            log.warning("%d URL(s) without a parseable host skipped", ranking.skipped_urls)
    return report


def stage_evaluate(report: DetectionReport, truth: set[str], universe: set[str], tier: str | None) -> DetectionReport:
    if tier is None:
        tier = report.parameters.get("detection", {}).get("tier", "both")
    t1, t2 = set(report.tier1), set(report.tier2)
    predicted = t1 if tier == "1" else t2 if tier == "2" else t1 | t2
    m = evaluate(predicted, truth, universe)
    report.metrics = {
        **m.as_dict(),
        "tier": tier,
        "total_predicted": len(predicted),
        "predicted_correctly": m.tp,
        "total_bots": len(truth),
        "universe_size": len(universe),
    }
    log.info("recall %.4f precision %.4f f1 %.4f", m.recall, m.precision, m.f1)
    return report


def _universe(args, records=None) -> set[str]:
    if getattr(args, "universe", None):
        return read_account_list(args.universe)
    if records is None:
        if not getattr(args, "input", None):
            raise ConfigError("evaluation needs --input (for the default universe) or --universe")
        records = read_canonical(args.input)
    return {r.retweeter for r in records}


def _params(args) -> DetectionParams:
    return DetectionParams(
        decile_fraction=args.decile_fraction,
        half_fraction=args.half_fraction,
        t1_override=None if args.t1 in (None, AUTO) else args.t1,
        t2_override=None if args.t2 in (None, AUTO) else args.t2,
        max_group_pair_size=args.max_group_pair_size,
    )


def _label(args) -> str:
    return args.label or Path(args.input).stem


# -- subcommand handlers ------------------------------------------------------------------


def cmd_ingest(args) -> None:
    mapping = ColumnMapping.load(args.mapping)
    with open(args.input, "rb") as fh:
        records = parse_mapped(fh, mapping, source=args.input)
    save_canonical(records, args.output)
    log.info("wrote %d canonical records to %s", len(records), args.output)


def cmd_detect(args) -> None:
    records = read_canonical(args.input)
    write_report(stage_detect(records, _params(args), args.tier, _label(args)), args.output)


def cmd_communities(args) -> None:
    report = stage_communities(read_report(args.report), args.resolution, args.seed)
    write_report(report, args.output or args.report)
    if args.labels_out:
        with open(args.labels_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("account,community\n")
            for name, label in (report.communities or {}).get("labels", {}).items():
                fh.write(f"{name},{label}\n")


def cmd_amplify(args) -> None:
    report = read_report(args.report)
    records = read_canonical(args.input)
    report = stage_amplify(report, records, args.by, args.top, args.scope)
    write_report(report, args.output or args.report)
    if args.pie:
        key = "accounts" if args.by == "account" else "domains"
        emit_pie_data(ranking_from_dict(report.amplification[key]), args.pie)


def cmd_evaluate(args) -> None:
    report = read_report(args.report)
    truth = read_account_list(args.truth)
    report = stage_evaluate(report, truth, _universe(args), args.tier)
    write_report(report, args.output or args.report)
    if args.metrics_out:
        with open(args.metrics_out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.metrics, fh, indent=2)
            fh.write("\n")


def cmd_sweep(args) -> None:
    records = read_canonical(args.input)
    truth = read_account_list(args.truth)
    rows = sweep_t2(group_tweets(records), truth, _universe(args, records), args.t2_list, args.tier, _params(args))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_sweep_csv(rows, fh)
    else:
        write_sweep_csv(rows, sys.stdout)


def cmd_export(args) -> None:
    report = read_report(args.report)
    communities = report.community_assignment()
    graph = report.graph()
    if communities is None:
        if graph.n_edges:
            raise ConfigError("report has no community labels; run the 'communities' subcommand first")
        from .community import CommunityAssignment

        communities = CommunityAssignment({}, 0.0)
    export_graph(graph, communities, args.format, args.output)


def cmd_simulate(args) -> None:
    config = SynthConfig.load(args.scenario) if args.scenario else SynthConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.evasion is not None:
        config.evasion_mode = args.evasion
    config.validate()
    n_records, n_bots = write_scenario(config, args.output, args.truth)
    log.info("wrote %d records (%d planted bots) to %s", n_records, n_bots, args.output)


def cmd_pipeline(args) -> None:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    records = read_canonical(args.input)
    report = stage_detect(records, _params(args), args.tier, _label(args))
    report = stage_communities(report, args.resolution, args.seed)
    report = stage_amplify(report, records, "account", args.top, args.scope)
    report = stage_amplify(report, records, "domain", args.top, args.scope)
    if args.truth:
        report = stage_evaluate(report, read_account_list(args.truth), _universe(args, records), None)
    write_report(report, out / "report.json")
    emit_pie_data(ranking_from_dict(report.amplification["accounts"]), out / "pie_accounts.csv")
    emit_pie_data(ranking_from_dict(report.amplification["domains"]), out / "pie_domains.csv")
    graph = report.graph()
    communities = report.community_assignment()
    if communities is None:
        from .community import CommunityAssignment

        communities = CommunityAssignment({}, 0.0)
    for fmt in args.formats:
        export_graph(graph, communities, fmt, out / f"graph.{fmt}")
    log.info("pipeline outputs in %s", out)


# -- parser -------------------------------------------------------------------------------


def _add_detect_flags(p: argparse.ArgumentParser) -> None:
    t1 = p.add_mutually_exclusive_group()
    t1.add_argument("--t1", type=_auto_or_positive, default=None, metavar="auto|SECONDS",
                    help="threshold 1 in seconds, or 'auto' to estimate (default)")
    t1.add_argument("--t1-seconds", dest="t1", type=_positive_int, metavar="N", help="fixed threshold 1")
    t2 = p.add_mutually_exclusive_group()
    t2.add_argument("--t2", type=_auto_or_positive, default=None, metavar="auto|COUNT",
                    help="threshold 2 co-retweet count, or 'auto' to estimate (default)")
    t2.add_argument("--t2-count", dest="t2", type=_positive_int, metavar="N", help="fixed threshold 2")
    p.add_argument("--tier", choices=TIERS, default="both", help="bot tier(s) to report and graph")
    p.add_argument("--decile-fraction", type=float, default=0.10)
    p.add_argument("--half-fraction", type=float, default=0.50)
    p.add_argument("--max-group-pair-size", type=_positive_int, default=None,
                   help="cap on retweeters per group used for pair counting")
    p.add_argument("--label", default=None, help="dataset label for the report")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS,
                        help="more log output (repeatable)")
    parser = argparse.ArgumentParser(prog="botnet-detect", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)  # type: ignore[method-assign]

    p = sub.add_parser("ingest", help="convert a raw dataset CSV to canonical form")
    p.add_argument("--input", required=True)
    p.add_argument("--mapping", required=True, help="column-mapping JSON")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("detect", help="estimate thresholds and classify bots")
    p.add_argument("--input", required=True, help="canonical CSV")
    p.add_argument("--output", required=True, help="report JSON")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("communities", help="Louvain communities on the report's coordinated graph")
    p.add_argument("--report", required=True)
    p.add_argument("--output", default=None, help="defaults to updating --report in place")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels-out", default=None, help="optional account,community CSV")
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("amplify", help="rank amplified accounts or domains")
    p.add_argument("--input", required=True, help="canonical CSV")
    p.add_argument("--report", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--by", choices=("account", "domain"), default="account")
    p.add_argument("--top", type=_positive_int, default=10)
    p.add_argument("--scope", choices=SCOPES, default="evidence",
                   help="'suspect' restricts to the fast groups only")
    p.add_argument("--pie", default=None, help="also write name,count,share CSV")
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("evaluate", help="score the report against a ground-truth bot list")
    p.add_argument("--report", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--universe", default=None, help="account list; default: all retweeters in --input")
    p.add_argument("--input", default=None, help="canonical CSV for the default universe")
    p.add_argument("--tier", choices=TIERS, default=None)
    p.add_argument("--output", default=None)
    p.add_argument("--metrics-out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="evaluate over several threshold-2 values")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--universe", default=None)
    p.add_argument("--t2-list", type=_int_list, required=True, metavar="A,B,C")
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="write the coordinated graph for Gephi")
    p.add_argument("--report", required=True)
    p.add_argument("--format", choices=GRAPH_FORMATS, default="gexf")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("simulate", help="generate a planted-botnet dataset")
    p.add_argument("--scenario", default=None, help="scenario JSON (default scenario if omitted)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--evasion", choices=("none", "relaxed_timing", "split_communities"), default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--truth", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pipeline", help="detect, communities, amplify, evaluate and export in one go")
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--universe", default=None)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=_positive_int, default=10)
    p.add_argument("--scope", choices=SCOPES, default="evidence")
    p.add_argument("--formats", type=lambda s: s.split(","), default=["gexf", "graphml"])
    _add_detect_flags(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = os.environ.get("BOTNET_DETECT_LOG_LEVEL", "").upper() or (
        "DEBUG" if verbosity > 1 else "INFO" if verbosity == 1 else "WARNING"
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(getattr(args, "verbose", 0))
    if getattr(args, "formats", None):
        bad = [f for f in args.formats if f not in GRAPH_FORMATS]
        if bad:
            print(f"botnet-detect: error: unknown graph format(s) {bad}", file=sys.stderr)
            return 2
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"botnet-detect: configuration error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"botnet-detect: input error: {exc}", file=sys.stderr)
        return 1
    except DetectError as exc:
        print(f"botnet-detect: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"botnet-detect: input error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
