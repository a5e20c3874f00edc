"""Parsing of retweet logs into canonical records and tweet groups.

Canonical CSV layout (UTF-8, header required)::

    tweet_id,retweet_id,author,retweeter,timestamp,urls

``urls`` is a ``|``-separated list and may be empty.  Raw dataset layouts
are converted with :func:`parse_mapped` and a :class:`ColumnMapping`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable

from .errors import ConfigError, InputError

CANONICAL_COLUMNS = ("tweet_id", "retweet_id", "author", "retweeter", "timestamp", "urls")
URL_SEPARATOR = "|"


@dataclass(frozen=True, slots=True)
class RetweetRecord:
    tweet_id: str
    retweet_id: str
    author: str
    retweeter: str
    timestamp: int
    urls: tuple[str, ...] = ()
    text: str | None = None


@dataclass(frozen=True, slots=True)
class TweetGroup:
    """An original tweet with its retweets ordered by (timestamp, retweet_id)."""

    tweet_id: str
    author: str
    retweets: tuple[tuple[str, str, int], ...]

    @property
    def size(self) -> int:
        return len(self.retweets)

    def first_gap(self) -> int | None:
        """Seconds between the first and second retweet, or None if size < 2."""
        if len(self.retweets) < 2:
            return None
        return self.retweets[1][2] - self.retweets[0][2]

    def retweeters(self) -> list[str]:
        """Distinct retweeters in order of their first retweet."""
        return list(dict.fromkeys(r[1] for r in self.retweets))


def _text_stream(stream: IO[bytes] | IO[str]) -> IO[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _split_urls(value: str, sep: str = URL_SEPARATOR) -> tuple[str, ...]:
    if not value:
        return ()
    return tuple(u for u in (p.strip() for p in value.split(sep)) if u)


def parse_canonical(stream: IO[bytes] | IO[str], source: str | None = None) -> list[RetweetRecord]:
    """Parse a canonical CSV stream into records, preserving row order."""
    reader = csv.reader(_text_stream(stream))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty input, expected canonical header", line=1, source=source)
    except UnicodeDecodeError as exc:
        raise InputError(f"not valid UTF-8: {exc}", line=1, source=source)
    if tuple(h.strip() for h in header) != CANONICAL_COLUMNS:
        raise InputError(
            f"bad header {header!r}, expected {','.join(CANONICAL_COLUMNS)}", line=1, source=source
        )

    records: list[RetweetRecord] = []
    seen: dict[str, int] = {}
    ncols = len(CANONICAL_COLUMNS)
    try:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != ncols:
                raise InputError(f"expected {ncols} columns, got {len(row)}", line=line, source=source)
            tweet_id, retweet_id, author, retweeter, ts, urls = row
            if not (tweet_id and retweet_id and author and retweeter):
                raise InputError("empty required field", line=line, source=source)
            try:
                timestamp = int(ts)
            except ValueError:
                raise InputError(f"non-integer timestamp {ts!r}", line=line, source=source) from None
            if timestamp < 0:
                raise InputError(f"negative timestamp {timestamp}", line=line, source=source)
            prev = seen.get(retweet_id)
            if prev is not None:
                raise InputError(
                    f"duplicate retweet_id {retweet_id!r} on lines {prev} and {line}", line=line, source=source
                )
            seen[retweet_id] = line
            records.append(RetweetRecord(tweet_id, retweet_id, author, retweeter, timestamp, _split_urls(urls)))
    except UnicodeDecodeError as exc:
        raise InputError(f"not valid UTF-8: {exc}", source=source) from None
    except csv.Error as exc:
        raise InputError(f"CSV error: {exc}", line=reader.line_num, source=source) from None
    return records


def read_canonical(path: str | Path) -> list[RetweetRecord]:
    with open(path, "rb") as fh:
        return parse_canonical(fh, source=str(path))


def write_canonical(records: Iterable[RetweetRecord], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CANONICAL_COLUMNS)
    for r in records:
        writer.writerow((r.tweet_id, r.retweet_id, r.author, r.retweeter, r.timestamp, URL_SEPARATOR.join(r.urls)))


def save_canonical(records: Iterable[RetweetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_canonical(records, fh)


# -- mapped (raw dataset) input ------------------------------------------------

_REQUIRED = ("tweet_id", "author", "retweeter", "timestamp")
_OPTIONAL = ("retweet_id", "urls", "text")


@dataclass
class ColumnMapping:
    """How to read a raw dataset CSV.

    ``columns`` maps canonical field names to either a header name or a
    1-based column position.  With ``retweet_id="synthesize"`` the id is
    built as ``<tweet_id>#<row-index>`` (0-based data row index).
    """

    columns: dict[str, str | int]
    timestamp_format: str = "epoch"
    retweet_id: str = "column"
    header: bool = True
    url_separator: str = URL_SEPARATOR

    def __post_init__(self) -> None:
        if self.timestamp_format not in ("epoch", "iso8601"):
            raise ConfigError(f"timestamp_format must be 'epoch' or 'iso8601', got {self.timestamp_format!r}")
        if self.retweet_id not in ("column", "synthesize"):
            raise ConfigError(f"retweet_id must be 'column' or 'synthesize', got {self.retweet_id!r}")
        unknown = set(self.columns) - set(_REQUIRED) - set(_OPTIONAL)
        if unknown:
            raise ConfigError(f"unknown canonical fields in mapping: {sorted(unknown)}")
        needed = list(_REQUIRED) + (["retweet_id"] if self.retweet_id == "column" else [])
        missing = [f for f in needed if f not in self.columns]
        if missing:
            raise ConfigError(f"mapping lacks columns for {missing}")
        for name, ref in self.columns.items():
            if isinstance(ref, bool) or not isinstance(ref, (str, int)):
                raise ConfigError(f"column reference for {name!r} must be a name or 1-based position")
            if isinstance(ref, int) and ref < 1:
                raise ConfigError(f"column position for {name!r} must be >= 1, got {ref}")
            if isinstance(ref, str) and not self.header:
                raise ConfigError(f"column {ref!r} referenced by name but mapping has header=false")

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnMapping":
        if not isinstance(data, dict) or "columns" not in data:
            raise ConfigError("mapping must be an object with a 'columns' member")
        allowed = {"columns", "timestamp_format", "retweet_id", "header", "url_separator"}
        extra = set(data) - allowed
        if extra:
            raise ConfigError(f"unknown mapping keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ColumnMapping":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read mapping {path}: {exc}") from None
        return cls.from_dict(data)


def parse_timestamp(value: str, fmt: str) -> int:
    """Convert a raw timestamp to integer UTC epoch seconds (sub-second part dropped)."""
    value = value.strip()
    if fmt == "epoch":
        try:
            return int(value)
        except ValueError:
            seconds = float(value)  # raises ValueError on garbage
            if not math.isfinite(seconds):
                raise ValueError(value)
            return math.floor(seconds)
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return math.floor(dt.timestamp())


def parse_mapped(
    stream: IO[bytes] | IO[str], mapping: ColumnMapping, source: str | None = None
) -> list[RetweetRecord]:
    """Parse a raw dataset CSV through ``mapping`` into canonical records."""
    reader = csv.reader(_text_stream(stream))
    index: dict[str, int] = {}
    header: list[str] | None = None
    if mapping.header:
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError("empty input, expected header", line=1, source=source)
    for name, ref in mapping.columns.items():
        if isinstance(ref, int):
            if header is not None and ref > len(header):
                raise ConfigError(f"column position {ref} for {name!r} beyond header width {len(header)}")
            index[name] = ref - 1
        else:
            assert header is not None
            if ref not in header:
                raise ConfigError(f"mapping column {ref!r} (for {name!r}) not in header {header}")
            index[name] = header.index(ref)

    width = max(index.values()) + 1
    synth = mapping.retweet_id == "synthesize"
    records: list[RetweetRecord] = []
    seen: dict[str, int] = {}
    row_index = 0
    try:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) < width:
                raise InputError(f"expected at least {width} columns, got {len(row)}", line=line, source=source)
            tweet_id = row[index["tweet_id"]].strip()
            author = row[index["author"]].strip()
            retweeter = row[index["retweeter"]].strip()
            retweet_id = f"{tweet_id}#{row_index}" if synth else row[index["retweet_id"]].strip()
            if not (tweet_id and author and retweeter and retweet_id):
                raise InputError("empty required field", line=line, source=source)
            raw_ts = row[index["timestamp"]]
            try:
                timestamp = parse_timestamp(raw_ts, mapping.timestamp_format)
            except (ValueError, OverflowError):
                raise InputError(
                    f"unparseable {mapping.timestamp_format} timestamp {raw_ts!r}", line=line, source=source
                ) from None
            if timestamp < 0:
                raise InputError(f"negative timestamp {timestamp}", line=line, source=source)
            prev = seen.get(retweet_id)
            if prev is not None:
                raise InputError(
                    f"duplicate retweet_id {retweet_id!r} on lines {prev} and {line}", line=line, source=source
                )
            seen[retweet_id] = line
            urls = _split_urls(row[index["urls"]], mapping.url_separator) if "urls" in index else ()
            text = row[index["text"]] if "text" in index else None
            records.append(RetweetRecord(tweet_id, retweet_id, author, retweeter, timestamp, urls, text))
            row_index += 1
    except UnicodeDecodeError as exc:
        raise InputError(f"not valid UTF-8: {exc}", source=source) from None
    except csv.Error as exc:
        raise InputError(f"CSV error: {exc}", line=reader.line_num, source=source) from None
    return records


def group_tweets(records: Iterable[RetweetRecord]) -> list[TweetGroup]:
    """Bucket records by tweet_id; groups are returned sorted by tweet_id.

    The group author is taken from its earliest retweet.
    """
    buckets: dict[str, list[RetweetRecord]] = defaultdict(list)
    for r in records:
        buckets[r.tweet_id].append(r)
    groups = []
    for tweet_id in sorted(buckets):
        members = sorted(buckets[tweet_id], key=lambda r: (r.timestamp, r.retweet_id))
        groups.append(
            TweetGroup(
                tweet_id=tweet_id,
                author=members[0].author,
                retweets=tuple((r.retweet_id, r.retweeter, r.timestamp) for r in members),
            )
        )
    return groups
