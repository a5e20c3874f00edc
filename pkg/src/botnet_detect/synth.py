"""Synthetic retweet cascades with planted botnets.

Humans retweet with log-normal inter-retweet times.  Each botnet picks its
own target groups (tweets by the amplified authors) and all of its bots
retweet each target within ``bot_reaction_delay_max`` seconds of the
group's first (seed) retweet, spaced nearly evenly.

Evasion modes:

``relaxed_timing``
    bot delays are multiplied by 100.
``split_communities``
    each botnet is cut into cells of two bots (three for an odd remainder);
    every cell gets its own disjoint target groups, at most
    ``split_max_pair_coretweets`` of them.  No bot pair co-retweets more
    than that many groups, so any ``t2 > split_max_pair_coretweets`` hides
    the botnet from the pair filter.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64); output
is a pure function of the config.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .evaluate import write_account_list
from .ingest import RetweetRecord, save_canonical

EVASION_MODES = ("none", "relaxed_timing", "split_communities")
RELAXED_FACTOR = 100


@dataclass
class SynthConfig:
    n_humans: int = 2000
    n_bots: int = 20
    n_botnets: int = 2
    n_groups: int = 1000
    human_retweets_per_group: tuple[int, int] = (1, 20)
    bot_target_groups_per_botnet: int = 40
    bot_reaction_delay_max: int = 5
    human_irt_lognormal: tuple[float, float] = (6.4, 1.5)
    evasion_mode: str = "none"
    amplified_authors: tuple[str, ...] = ("amplified_author_a", "amplified_author_b")
    amplified_domains: tuple[str, ...] = ("promo-news.example", "rally-daily.example")
    organic_url_rate: float = 0.3
    split_max_pair_coretweets: int = 3
    start_time: int = 1_600_000_000
    time_span: int = 30 * 86400
    seed: int = 0

    def __post_init__(self) -> None:
        self.human_retweets_per_group = tuple(self.human_retweets_per_group)
        self.human_irt_lognormal = tuple(float(x) for x in self.human_irt_lognormal)
        self.amplified_authors = tuple(self.amplified_authors)
        self.amplified_domains = tuple(self.amplified_domains)
        self.validate()

    def validate(self) -> None:
        for name in ("n_humans", "n_bots", "n_botnets", "n_groups", "bot_target_groups_per_botnet",
                     "bot_reaction_delay_max", "start_time", "time_span", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")
        lo, hi = self.human_retweets_per_group
        if not (0 <= lo <= hi):
            raise ConfigError(f"human_retweets_per_group must satisfy 0 <= lo <= hi, got {(lo, hi)}")
        if hi > self.n_humans:
            raise ConfigError("human_retweets_per_group upper bound exceeds n_humans")
        if self.n_groups > 0 and self.n_humans == 0:
            raise ConfigError("groups need at least one human for the seed retweet")
        if self.n_botnets > 0 and self.n_bots < 2 * self.n_botnets:
            raise ConfigError("each botnet needs at least two bots")
        if self.n_bots > 0 and self.n_botnets == 0:
            raise ConfigError("bots present but n_botnets is 0")
        if self.n_botnets * self.bot_target_groups_per_botnet > self.n_groups:
            raise ConfigError("more bot target groups than groups")
        if self.evasion_mode not in EVASION_MODES:
            raise ConfigError(f"evasion_mode must be one of {EVASION_MODES}, got {self.evasion_mode!r}")
        if self.n_botnets > 0 and not self.amplified_authors:
            raise ConfigError("amplified_authors must be non-empty when botnets exist")
        if not 0.0 <= self.organic_url_rate <= 1.0:
            raise ConfigError("organic_url_rate must be in [0, 1]")
        if self.split_max_pair_coretweets < 1:
            raise ConfigError("split_max_pair_coretweets must be >= 1")
        if self.human_irt_lognormal[1] < 0:
            raise ConfigError("lognormal sigma must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown scenario keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad scenario: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "SynthConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def human_name(i: int) -> str:
    return f"h{i:06d}"


def bot_name(net: int, j: int) -> str:
    return f"b{net:02d}_{j:03d}"


def botnet_members(config: SynthConfig) -> list[list[str]]:
    """Bot names per botnet; bots are dealt out as evenly as possible."""
    sizes = [config.n_bots // config.n_botnets + (1 if i < config.n_bots % config.n_botnets else 0)
             for i in range(config.n_botnets)]
    return [[bot_name(b, j) for j in range(s)] for b, s in enumerate(sizes)]


def _cells(bots: list[str]) -> list[list[str]]:
    cells = [bots[i : i + 2] for i in range(0, len(bots), 2)]
    if len(cells) > 1 and len(cells[-1]) == 1:
        cells[-2].extend(cells.pop())
    return cells


def _bot_delays(rng: np.random.Generator, n: int, cap: int) -> list[int]:
    # near-even spacing over (0, cap], jittered by < 1 s, never beyond cap
    base = (np.arange(1, n + 1) * (cap / n)) if n else np.zeros(0)
    return [min(cap, int(x)) for x in base + rng.random(n)]


def generate(config: SynthConfig) -> tuple[list[RetweetRecord], set[str]]:
    """Records (grouped, time-ordered within each group) and the bot ground truth."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    nets = botnet_members(config) if config.n_botnets else []
    truth = {b for net in nets for b in net}

    # target assignment: group index -> (botnet index, bots retweeting it)
    n_targets = config.bot_target_groups_per_botnet
    order = rng.permutation(config.n_groups)
    targets: dict[int, tuple[int, list[str]]] = {}
    cursor = 0
    for b, bots in enumerate(nets):
        chosen = order[cursor : cursor + n_targets].tolist()
        cursor += n_targets
        if config.evasion_mode == "split_communities":
            cells = _cells(bots)
            per_cell = min(config.split_max_pair_coretweets, -(-n_targets // len(cells)))
            for c, cell in enumerate(cells):
                for gi in chosen[c * per_cell : (c + 1) * per_cell]:
                    targets[gi] = (b, cell)
        else:
            for gi in chosen:
                targets[gi] = (b, bots)

    mu, sigma = config.human_irt_lognormal
    lo, hi = config.human_retweets_per_group
    delay_scale = RELAXED_FACTOR if config.evasion_mode == "relaxed_timing" else 1
    width = max(6, len(str(max(config.n_groups - 1, 0))))
    records: list[RetweetRecord] = []
    for gi in range(config.n_groups):
        tweet_id = f"t{gi:0{width}d}"
        start = config.start_time + int(rng.integers(0, max(config.time_span, 1)))
        target = targets.get(gi)
        k = int(rng.integers(lo, hi + 1))
        if target is not None:
            k = max(k, 1)
        humans = rng.choice(config.n_humans, size=k, replace=False).tolist() if k else []
        gaps = np.rint(rng.lognormal(mu, sigma, size=max(k - 1, 0))).astype(np.int64)
        times = [start] + (start + np.cumsum(gaps)).tolist()
        events = [(times[j], human_name(h)) for j, h in enumerate(humans)]

        if target is not None:
            net, bots = target
            author = config.amplified_authors[net % len(config.amplified_authors)]
            shuffled = [bots[j] for j in rng.permutation(len(bots)).tolist()]
            delays = _bot_delays(rng, len(shuffled), config.bot_reaction_delay_max)
            events += [(start + d * delay_scale, bot) for d, bot in zip(delays, shuffled)]
            domains = config.amplified_domains
            urls = (f"https://{domains[net % len(domains)]}/story/{gi}",) if domains else ()
        else:
            author = human_name(int(rng.integers(0, config.n_humans))) if config.n_humans else "nobody"
            if rng.random() < config.organic_url_rate:
                urls = (f"https://news{int(rng.integers(0, 50)):02d}.example/a/{gi}",)
            else:
                urls = ()

        rows = [(ts, f"{tweet_id}-{j:04d}", who) for j, (ts, who) in enumerate(events)]
        rows.sort()
        records.extend(RetweetRecord(tweet_id, rid, author, who, ts, urls) for ts, rid, who in rows)
    return records, truth


def write_scenario(config: SynthConfig, csv_path: str | Path, truth_path: str | Path | None = None) -> tuple[int, int]:
    """Generate and write canonical CSV (+ truth list); returns (records, bots)."""
    records, truth = generate(config)
    save_canonical(records, csv_path)
    if truth_path is not None:
        with open(truth_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# planted bot accounts\n")
            write_account_list(truth, fh)
    return len(records), len(truth)
