"""Confusion-matrix metrics against a ground-truth bot list, and threshold-2 sweeps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Collection, Iterable, Sequence

from .detect import DetectionParams, TweetGroup, classify_from_evidence, gather_evidence
from .errors import ConfigError, InputError

SWEEP_COLUMNS = (
    "t2", "total_predicted", "predicted_correctly", "total_bots",
    "accuracy", "precision", "recall", "f1",
)


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fp + self.fn + self.tn
        return (self.tp + self.tn) / total if total else 0.0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def as_dict(self) -> dict:
        # recall leads: with rare bots, accuracy is dominated by true negatives
        return {
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
        }


def evaluate(predicted: Collection[str], truth: Collection[str], universe: Collection[str]) -> Metrics:
    predicted, truth, universe = set(predicted), set(truth), set(universe)
    if not universe:
        raise InputError("evaluation universe is empty")
    for name, s in (("predicted", predicted), ("truth", truth)):
        outside = s - universe
        if outside:
            shown = ", ".join(sorted(outside)[:10])
            raise InputError(f"{len(outside)} {name} account(s) not in universe: {shown}")
    tp = len(predicted & truth)
    fp = len(predicted - truth)
    fn = len(truth - predicted)
    return Metrics(tp, fp, fn, len(universe) - tp - fp - fn)


def read_account_list(path: str | Path) -> set[str]:
    """Newline-delimited account names; blank lines and ``#`` comments ignored."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read account list: {exc}", source=str(path)) from None
    except UnicodeDecodeError as exc:
        raise InputError(f"not valid UTF-8: {exc}", source=str(path)) from None
    return {s for s in (ln.strip() for ln in lines) if s and not s.startswith("#")}


def write_account_list(names: Iterable[str], stream: IO[str]) -> None:
    for name in sorted(names):
        stream.write(name + "\n")


@dataclass(frozen=True)
class SweepRow:
    t2: int
    total_predicted: int
    predicted_correctly: int
    total_bots: int
    metrics: Metrics


def sweep_t2(
    groups: Sequence[TweetGroup],
    truth: Collection[str],
    universe: Collection[str],
    t2_values: Sequence[int],
    tier: str = "both",
    params: DetectionParams = DetectionParams(),
) -> list[SweepRow]:
    """One row per t2 value, in input order; phase-one work is shared across rows."""
    if not t2_values:
        raise ConfigError("t2 sweep needs at least one value")
    if any(isinstance(t, bool) or not isinstance(t, int) or t < 1 for t in t2_values):
        raise ConfigError(f"t2 values must be positive integers, got {list(t2_values)}")
    evidence = gather_evidence(groups, params)
    truth = set(truth)
    rows = []
    for t2 in t2_values:
        report = classify_from_evidence(evidence, params.with_t2(t2))
        predicted = report.selected(tier)
        m = evaluate(predicted, truth, universe)
        rows.append(SweepRow(t2, len(predicted), m.tp, len(truth), m))
    return rows


def write_sweep_csv(rows: Iterable[SweepRow], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        m = r.metrics
        writer.writerow(
            [r.t2, r.total_predicted, r.predicted_correctly, r.total_bots]
            + [f"{v:.4f}" for v in (m.accuracy, m.precision, m.recall, m.f1)]
        )
