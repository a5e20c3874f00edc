"""Rank the accounts and URL domains amplified by coordinated tweet groups."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence
from urllib.parse import urlsplit

from .detect import CoordGraph
from .errors import ConfigError
from .ingest import RetweetRecord, TweetGroup

SCOPES = ("evidence", "suspect")


@dataclass
class AmplificationRanking:
    """Top-k entities; ``share`` is normalised over the returned entries only."""

    kind: str
    entries: list[tuple[str, int, float]]
    k: int
    skipped_urls: int = 0

    def names(self) -> list[str]:
        return [name for name, _, _ in self.entries]


def _rank(kind: str, tally: Counter, k: int, skipped: int = 0) -> AmplificationRanking:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    top = sorted(((n, c) for n, c in tally.items() if c > 0), key=lambda nc: (-nc[1], nc[0]))[:k]
    total = sum(c for _, c in top)
    return AmplificationRanking(kind, [(n, c, c / total) for n, c in top], k, skipped)


def amplified_accounts(groups: Iterable[TweetGroup], coordinated: Iterable[str], k: int = 10) -> AmplificationRanking:
    """Authors ranked by total retweets received on coordinated groups."""
    ids = set(coordinated)
    tally: Counter = Counter()
    for g in groups:
        if g.tweet_id in ids:
            tally[g.author] += len(g.retweets)
    return _rank("account", tally, k)


def url_domain(url: str) -> str | None:
    """Lowercased host without a leading ``www.``; None when no host can be parsed."""
    url = url.strip()
    if not url:
        return None
    if "://" not in url:
        # bare "example.com/path" forms; a lone word without a dot is not a URL
        head = url.split("/", 1)[0]
        if "." not in head:
            return None
        url = "http://" + url
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    if not host or "." not in host.strip("."):
        return None
    host = host.lower().rstrip(".")
    if host.startswith("www."):
        host = host[4:]
    return host or None


def amplified_domains(
    records: Iterable[RetweetRecord], coordinated: Iterable[str], k: int = 10
) -> AmplificationRanking:
    """URL domains ranked by occurrences on retweets of coordinated groups."""
    ids = set(coordinated)
    tally: Counter = Counter()
    skipped = 0
    for r in records:
        if r.tweet_id not in ids:
            continue
        for url in r.urls:
            domain = url_domain(url)
            if domain is None:
                skipped += 1
            else:
                tally[domain] += 1
    return _rank("domain", tally, k, skipped)


def coordinated_group_ids(
    groups: Sequence[TweetGroup], flagged: Iterable[str], graph: CoordGraph, scope: str = "evidence"
) -> set[str]:
    """Groups feeding amplification.

    ``suspect``: the flagged (fast) groups only.  ``evidence``: the flagged
    groups plus every group retweeted by both ends of some edge of the
    highly coordinated ``graph``.
    """
    if scope not in SCOPES:
        raise ConfigError(f"scope must be one of {SCOPES}, got {scope!r}")
    ids = set(flagged)
    if scope == "suspect" or graph.n_edges == 0:
        return ids
    pos = {a: i for i, a in enumerate(graph.nodes)}
    n = graph.n_nodes
    edges = set((graph.src * n + graph.dst).tolist())
    for g in groups:
        if g.tweet_id in ids:
            continue
        members = sorted({pos[a] for _, a, _ in g.retweets if a in pos})
        if len(members) < 2:
            continue
        if any(a * n + b in edges for i, a in enumerate(members) for b in members[i + 1 :]):
            ids.add(g.tweet_id)
    return ids
