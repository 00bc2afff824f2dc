"""Result files: results.csv, cdf.csv, transcript.log and summary.txt.

Floats are written with ``repr`` so every file round-trips exactly, which
lets the summary be recomputed bit-for-bit from results.csv and the
transcript.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .protocol import DenyReason, TranscriptRecord
from .sim import ORTHOGONAL, PROTOCOL, HorizonResult, RunConfig
from .stats import percentile_series
from .utility import UtilityWeights, nearest_rank, network_utility

RESULTS_HEADER = ("scheme", "operator", "snapshot", "user", "rate_bps")
CDF_HEADER = ("scheme", "operator", "percentile", "rate_bps")


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    operator: str
    snapshot: int
    user: int
    rate: float


def result_rows(result: HorizonResult) -> List[ResultRow]:
    rows = []
    for scheme in result.schemes:
        for t, rates in enumerate(result.rates[scheme]):
            for u, (op, r) in enumerate(zip(result.user_operator[t], rates)):
                rows.append(ResultRow(scheme, op, t, u, float(r)))
    return rows


def write_results_csv(rows: Iterable[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in rows:
            w.writerow((r.scheme, r.operator, r.snapshot, r.user, repr(r.rate)))


def read_results_csv(path) -> List[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULTS_HEADER:
            raise ValueError(f"unexpected results header {header}")
        return [ResultRow(s, op, int(t), int(u), float(r)) for s, op, t, u, r in reader]


def write_transcript(records: Iterable[TranscriptRecord], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_line() + "\n")


def read_transcript(path) -> List[TranscriptRecord]:
    with open(path) as fh:
        return [TranscriptRecord.from_line(line) for line in fh if line.strip()]


def _samples(rows: Sequence[ResultRow], warmup: int) -> Dict[Tuple[str, str], List[float]]:
    out: Dict[Tuple[str, str], List[float]] = defaultdict(list)
    for r in rows:
        if r.snapshot >= warmup:
            out[(r.scheme, r.operator)].append(r.rate)
    return out


def write_cdf_csv(rows: Sequence[ResultRow], schemes: Sequence[str], operators: Sequence[str],
                  warmup: int, path) -> None:
    samples = _samples(rows, warmup)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CDF_HEADER)
        for scheme in schemes:
            for op in operators:
                for p, rate in percentile_series(samples.get((scheme, op), [])):
                    w.writerow((scheme, op, p, repr(rate)))


# -- summary ----------------------------------------------------------------

SUMMARY_FIELDS = ("mean_rate_bps", "edge_rate_bps", "mean_utility", "asked", "granted",
                  "received", *(f"denied_{r.value}" for r in DenyReason),
                  "ledger_granted", "ledger_received")


@dataclass
class SummaryRecord:
    scheme: str
    operator: str
    mean_rate_bps: float
    edge_rate_bps: float
    mean_utility: float
    asked: int = 0
    granted: int = 0
    received: int = 0
    denied: Dict[str, int] = field(default_factory=dict)
    ledger_granted: int = 0
    ledger_received: int = 0

    def to_line(self) -> str:
        parts = [f"scheme={self.scheme}", f"operator={self.operator}",
                 f"mean_rate_bps={self.mean_rate_bps!r}", f"edge_rate_bps={self.edge_rate_bps!r}",
                 f"mean_utility={self.mean_utility!r}", f"asked={self.asked}",
                 f"granted={self.granted}", f"received={self.received}"]
        parts += [f"denied_{r.value}={self.denied.get(r.value, 0)}" for r in DenyReason]
        parts += [f"ledger_granted={self.ledger_granted}",
                  f"ledger_received={self.ledger_received}"]
        return " ".join(parts)


def summarize(rows: Sequence[ResultRow], transcript: Sequence[TranscriptRecord],
              schemes: Sequence[str], operators: Sequence[str],
              weights: Mapping[str, UtilityWeights], snapshots: int,
              warmup: int) -> List[SummaryRecord]:
    """Per scheme and operator statistics over the post-warm-up snapshots.

    Rates and utilities skip the warm-up; favor counts and final ledger
    counters cover the whole horizon. Snapshots where an operator has no
    users contribute utility 0.
    """
    samples = _samples(rows, warmup)
    per_snapshot: Dict[Tuple[str, str, int], List[float]] = defaultdict(list)
    for r in rows:
        if r.snapshot >= warmup:
            per_snapshot[(r.scheme, r.operator, r.snapshot)].append(r.rate)

    kinds = Counter()
    ledger: Dict[str, Tuple[int, int]] = {}
    for rec in transcript:
        if rec.kind == "FavorRequest":
            kinds[("asked", rec.sender)] += 1
        elif rec.kind == "FavorGrant":
            kinds[("granted", rec.sender)] += 1
            kinds[("received", rec.recipient)] += 1
        else:
            kinds[(f"denied_{rec.reason}", rec.recipient)] += 1
        ledger[rec.sender] = (rec.sender_granted, rec.sender_received)
        ledger[rec.recipient] = (rec.recipient_granted, rec.recipient_received)

    out = []
    for scheme in schemes:
        for op in operators:
            s = samples.get((scheme, op), [])
            utils = [network_utility(per_snapshot.get((scheme, op, t), []), weights[op]).utility
                     for t in range(warmup, snapshots)]
            rec = SummaryRecord(
                scheme, op,
                mean_rate_bps=float(np.mean(s)) if s else 0.0,
                edge_rate_bps=nearest_rank(np.sort(s), weights[op].edge_percentile) if s else 0.0,
                mean_utility=float(np.mean(utils)) if utils else 0.0,
            )
            if scheme == PROTOCOL:
                rec.asked = kinds[("asked", op)]
                rec.granted = kinds[("granted", op)]
                rec.received = kinds[("received", op)]
                rec.denied = {r.value: kinds[(f"denied_{r.value}", op)] for r in DenyReason}
                rec.ledger_granted, rec.ledger_received = ledger.get(op, (0, 0))
            out.append(rec)
    return out


def format_summary(records: Sequence[SummaryRecord], config: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# snapshots={config.snapshots} warmup={config.warmup} seed={config.seed} "
              f"scenario={config.scenario.value} "
              f"placement={config.env.deployment.placement.value}\n")
    for rec in records:
        buf.write(rec.to_line() + "\n")
    return buf.getvalue()


def parse_summary(text: str) -> List[Dict[str, str]]:
    out = []
    for line in text.splitlines():
        if line.startswith("#") or not line.strip():
            continue
        out.append(dict(part.split("=", 1) for part in line.split()))
    return out


@dataclass
class RunArtifacts:
    results: Path
    transcript: Path
    summary: Path
    cdf: Path


def write_artifacts(result: HorizonResult, out_dir, summary_only: bool = False) -> RunArtifacts:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    paths = RunArtifacts(out / "results.csv", out / "transcript.log", out / "summary.txt",
                         out / "cdf.csv")
    rows = result_rows(result)
    records = summarize(rows, result.transcript, result.schemes, cfg.operators, cfg.weights,
                        cfg.snapshots, cfg.warmup)
    paths.summary.write_text(format_summary(records, cfg))
    if not summary_only:
        write_results_csv(rows, paths.results)
        write_transcript(result.transcript, paths.transcript)
        write_cdf_csv(rows, result.schemes, cfg.operators, cfg.warmup, paths.cdf)
    return paths


def recompute_summary(out_dir, config: RunConfig) -> str:
    """Rebuild summary.txt content from results.csv and transcript.log alone."""
    out = Path(out_dir)
    rows = read_results_csv(out / "results.csv")
    transcript = read_transcript(out / "transcript.log")
    schemes = [s for s in (PROTOCOL, ORTHOGONAL) if any(r.scheme == s for r in rows)]
    records = summarize(rows, transcript, schemes, config.operators, config.weights,
                        config.snapshots, config.warmup)
    return format_summary(records, config)
