"""Two-phase coordinated retweet detection.

Phase one finds the time threshold from the fastest decile of tweet groups
(first-to-second retweet gap) and flags suspect groups.  Phase two projects
the group/account bipartite graph onto account pairs, weights each pair by
the number of groups both retweeted, and keeps pairs at or above the
co-retweet threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, EstimationError
from .ingest import TweetGroup

log = logging.getLogger(__name__)

ESTIMATED = "estimated"
OVERRIDDEN = "overridden"


@dataclass(frozen=True)
class DetectionParams:
    decile_fraction: float = 0.10
    half_fraction: float = 0.50
    t1_override: int | None = None
    t2_override: int | None = None
    max_group_pair_size: int | None = None

    def __post_init__(self) -> None:
        if not 0 < self.decile_fraction <= 1:
            raise ConfigError(f"decile_fraction must be in (0, 1], got {self.decile_fraction}")
        if not 0 < self.half_fraction <= 1:
            raise ConfigError(f"half_fraction must be in (0, 1], got {self.half_fraction}")
        for name in ("t1_override", "t2_override", "max_group_pair_size"):
            value = getattr(self, name)
            if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value <= 0):
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.max_group_pair_size is not None and self.max_group_pair_size < 2:
            raise ConfigError("max_group_pair_size must be at least 2")

    def with_t2(self, t2: int | None) -> "DetectionParams":
        return DetectionParams(
            self.decile_fraction, self.half_fraction, self.t1_override, t2, self.max_group_pair_size
        )


@dataclass(frozen=True)
class Thresholds:
    t1_seconds: int
    t2_count: int
    t1_source: str = ESTIMATED
    t2_source: str = ESTIMATED


# -- phase one -------------------------------------------------------------------


def _gaps(groups: Iterable[TweetGroup]) -> list[int]:
    return [g.retweets[1][2] - g.retweets[0][2] for g in groups if len(g.retweets) >= 2]


def estimate_threshold1(groups: Sequence[TweetGroup], params: DetectionParams = DetectionParams()) -> int:
    """Largest first-to-second gap inside the fastest ``decile_fraction`` of groups."""
    if params.t1_override is not None:
        return params.t1_override
    gaps = sorted(_gaps(groups))
    if not gaps:
        raise EstimationError(
            "no tweet group has two or more retweets; cannot estimate threshold 1, supply a t1 override"
        )
    k = max(1, math.ceil(params.decile_fraction * len(gaps)))
    return gaps[k - 1]


def flag_suspect_groups(groups: Iterable[TweetGroup], t1: int) -> set[str]:
    """Ids of groups whose first-to-second gap is at most ``t1`` seconds."""
    if t1 < 0:
        raise ConfigError(f"t1 must be non-negative, got {t1}")
    return {
        g.tweet_id for g in groups if len(g.retweets) >= 2 and g.retweets[1][2] - g.retweets[0][2] <= t1
    }


def estimate_threshold2(flagged: Sequence[TweetGroup], params: DetectionParams = DetectionParams()) -> int:
    """Lower median, over flagged groups, of the retweet count needed to reach half the group."""
    if params.t2_override is not None:
        return params.t2_override
    if not flagged:
        raise EstimationError("no suspect groups; cannot estimate threshold 2, supply a t2 override")
    counts = sorted(math.ceil(params.half_fraction * len(g.retweets)) for g in flagged)
    median = counts[math.ceil(len(counts) / 2) - 1]
    return max(1, median)


# -- phase two: graphs --------------------------------------------------------------


@dataclass
class BipartiteGraph:
    """Group (left) / account (right) incidence in CSR form.

    Row ``r`` lists the distinct retweeters of ``groups[r]`` as indices into
    ``accounts``, ordered by their first retweet of that group.
    """

    groups: tuple[str, ...]
    accounts: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0])

    def edges(self) -> Iterator[tuple[str, str]]:
        for r, gid in enumerate(self.groups):
            for j in self.indices[self.indptr[r] : self.indptr[r + 1]]:
                yield gid, self.accounts[j]


def build_bipartite(groups: Sequence[TweetGroup], ids: Iterable[str] | None = None) -> BipartiteGraph:
    """Bipartite graph over the groups whose ids are in ``ids`` (all groups if None)."""
    if ids is None:
        selected = sorted(groups, key=lambda g: g.tweet_id)
    else:
        wanted = set(ids)
        selected = sorted((g for g in groups if g.tweet_id in wanted), key=lambda g: g.tweet_id)
        if len(selected) != len(wanted):
            missing = wanted - {g.tweet_id for g in selected}
            raise ValueError(f"unknown group ids: {sorted(missing)[:5]}")
    rows = [g.retweeters() for g in selected]
    accounts = tuple(sorted({a for row in rows for a in row}))
    position = {a: i for i, a in enumerate(accounts)}
    lengths = np.fromiter((len(row) for row in rows), dtype=np.int64, count=len(rows))
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    indices = np.fromiter((position[a] for row in rows for a in row), dtype=np.int64, count=int(indptr[-1]))
    return BipartiteGraph(tuple(g.tweet_id for g in selected), accounts, indptr, indices)


@dataclass
class CoordGraph:
    """Weighted undirected account graph; ``src[e] < dst[e]`` index ``nodes`` (sorted)."""

    nodes: tuple[str, ...] = ()
    src: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dst: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    weight: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def degree(self) -> np.ndarray:
        n = len(self.nodes)
        return np.bincount(self.src, minlength=n) + np.bincount(self.dst, minlength=n)

    def degrees(self) -> dict[str, int]:
        return dict(zip(self.nodes, self.degree.tolist()))

    def edges(self) -> Iterator[tuple[str, str, int]]:
        for s, d, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()):
            yield self.nodes[s], self.nodes[d], w

    def weights(self) -> dict[tuple[str, str], int]:
        return {(a, b): w for a, b, w in self.edges()}

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str, int]]) -> "CoordGraph":
        """Build from (a, b, weight) triples in any orientation; duplicates are summed."""
        acc: dict[tuple[str, str], int] = {}
        for a, b, w in edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            key = (a, b) if a < b else (b, a)
            acc[key] = acc.get(key, 0) + int(w)
        nodes = tuple(sorted({x for pair in acc for x in pair}))
        pos = {a: i for i, a in enumerate(nodes)}
        keys = sorted(acc, key=lambda k: (pos[k[0]], pos[k[1]]))
        return cls(
            nodes,
            np.array([pos[a] for a, _ in keys], dtype=np.int64),
            np.array([pos[b] for _, b in keys], dtype=np.int64),
            np.array([acc[k] for k in keys], dtype=np.int64),
        )


def _compact(nodes: Sequence[str], src: np.ndarray, dst: np.ndarray, weight: np.ndarray) -> CoordGraph:
    """Drop nodes without edges and reindex; preserves the (src, dst) sort."""
    used = np.unique(np.concatenate([src, dst]))
    return CoordGraph(
        tuple(nodes[i] for i in used.tolist()),
        np.searchsorted(used, src).astype(np.int64),
        np.searchsorted(used, dst).astype(np.int64),
        weight.astype(np.int64, copy=False),
    )


def project_coordination(b: BipartiteGraph, max_group_pair_size: int | None = None) -> CoordGraph:
    """Account graph weighted by the number of groups each pair co-retweeted."""
    cap = max_group_pair_size or 0
    if cap:
        sizes = np.diff(b.indptr)
        over = int(np.count_nonzero(sizes > cap))
        if over:
            log.warning(
                "%d group(s) exceed max_group_pair_size=%d; pairs limited to their earliest %d retweeters",
                over, cap, cap,
            )
    src, dst, weight = kernels.pair_weights(b.indptr, b.indices, max(len(b.accounts), 1), cap)
    return _compact(b.accounts, src, dst, weight)


def filter_coordinated(g: CoordGraph, t2: int) -> CoordGraph:
    """Keep edges with weight >= t2; isolated nodes are dropped."""
    if t2 < 1:
        raise ConfigError(f"t2 must be >= 1, got {t2}")
    keep = g.weight >= t2
    return _compact(g.nodes, g.src[keep], g.dst[keep], g.weight[keep])


# -- classification ---------------------------------------------------------------


@dataclass
class TierReport:
    tier1: frozenset[str]
    tier2: frozenset[str]
    flagged_group_ids: frozenset[str]
    thresholds: Thresholds
    eligible_groups: int = 0
    suspect_graph: CoordGraph = field(default_factory=CoordGraph)
    coordinated_graph: CoordGraph = field(default_factory=CoordGraph)

    @property
    def predicted(self) -> frozenset[str]:
        return self.tier1 | self.tier2

    def selected(self, tier: str) -> frozenset[str]:
        if tier == "1":
            return self.tier1
        if tier == "2":
            return self.tier2
        if tier == "both":
            return self.tier1 | self.tier2
        raise ConfigError(f"tier must be '1', '2' or 'both', got {tier!r}")

    def graph_for(self, tier: str) -> CoordGraph:
        """The highly coordinated graph backing ``tier``."""
        return self.suspect_graph if tier == "1" else self.coordinated_graph


@dataclass
class CoordinationEvidence:
    """Threshold-2-independent intermediate results, reusable across t2 values."""

    t1: int
    t1_source: str
    eligible_groups: int
    flagged: frozenset[str]
    flagged_groups: list[TweetGroup]
    suspect_projection: CoordGraph
    full_projection: CoordGraph


def gather_evidence(groups: Sequence[TweetGroup], params: DetectionParams = DetectionParams()) -> CoordinationEvidence:
    t1 = estimate_threshold1(groups, params)
    flagged = flag_suspect_groups(groups, t1)
    flagged_groups = [g for g in groups if g.tweet_id in flagged]
    cap = params.max_group_pair_size
    return CoordinationEvidence(
        t1=t1,
        t1_source=OVERRIDDEN if params.t1_override is not None else ESTIMATED,
        eligible_groups=sum(1 for g in groups if len(g.retweets) >= 2),
        flagged=frozenset(flagged),
        flagged_groups=flagged_groups,
        suspect_projection=project_coordination(build_bipartite(flagged_groups), cap),
        full_projection=project_coordination(build_bipartite(groups), cap),
    )


def classify_from_evidence(ev: CoordinationEvidence, params: DetectionParams = DetectionParams()) -> TierReport:
    t2 = estimate_threshold2(ev.flagged_groups, params)
    suspect_graph = filter_coordinated(ev.suspect_projection, t2)
    coordinated_graph = filter_coordinated(ev.full_projection, t2)
    tier1 = frozenset(suspect_graph.nodes)
    tier2 = frozenset(coordinated_graph.nodes) - tier1
    return TierReport(
        tier1=tier1,
        tier2=tier2,
        flagged_group_ids=ev.flagged,
        thresholds=Thresholds(
            ev.t1, t2, ev.t1_source, OVERRIDDEN if params.t2_override is not None else ESTIMATED
        ),
        eligible_groups=ev.eligible_groups,
        suspect_graph=suspect_graph,
        coordinated_graph=coordinated_graph,
    )


def classify_bots(groups: Sequence[TweetGroup], params: DetectionParams = DetectionParams()) -> TierReport:
    """Tier-1 bots coordinate inside the suspect (fast) groups; Tier-2 bots only across all groups."""
    if not groups:
        raise EstimationError("no tweet groups to classify")
    return classify_from_evidence(gather_evidence(groups, params), params)
