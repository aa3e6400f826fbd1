"""
Register-trace audit of AES runs.

A Tracer subscribes to the event bus and flattens every published value
into (step, segment, width, value, label) records. find_keys then searches
those records for the key bytes (against 8-bit records) and the round-key
words (against 32-bit records), bucketed by segment.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
import csv
from dataclasses import dataclass, field
from enum import StrEnum
import io
import logging
from pathlib import Path
import random

from pydantic import BaseModel, Field

from hoacs.aes_guard import aes128_encrypt_baseline, aes128_encrypt_protected, key_expansion
from hoacs.errors import NeedTwoKeys, PhaseOrderError
from hoacs.events import Event, IntrinsicEvent, PhaseEvent, WordEvent, event_bus
from hoacs.rnc_core import EncodedValue, MixedRadixDigits, ModuliSet

logger = logging.getLogger(__name__)

SEGMENTS = (0, 1, 2, 3)
PROTECTED_SEGMENTS = (1, 2)
CSV_HEADER = ("step", "segment", "width", "hex_value", "label")


class TraceMode(StrEnum):
    BASELINE = "baseline"
    PROTECTED_TREE = "protected-tree"
    PROTECTED_GRID = "protected-grid"


@dataclass(frozen=True, slots=True)
class TraceEvent:
    step: int
    segment: int
    value: int
    width: int
    label: str


@dataclass
class TraceLog:
    events: list[TraceEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def in_segment(self, segment: int) -> list[TraceEvent]:
        return [e for e in self.events if e.segment == segment]

    def segments(self) -> list[int]:
        return sorted({e.segment for e in self.events})

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e in self.events:
            writer.writerow((e.step, e.segment, e.width, f"{e.value:x}", e.label))
        return buffer.getvalue()

    def write_csv(self, path: Path) -> None:
        path.write_text(self.to_csv())


def _natural_width(value: int) -> int:
    if value < 256:
        return 8
    if value < 1 << 32:
        return 32
    return 64


def flatten(value: object) -> Iterator[tuple[int, int]]:
    """Yield (value, width) pairs for everything a register could hold."""
    if isinstance(value, bool):
        yield int(value), 8
    elif isinstance(value, int):
        yield value, _natural_width(value)
    elif isinstance(value, EncodedValue):
        for u in value.components:
            yield u, 64
    elif isinstance(value, MixedRadixDigits):
        for d in value.digits:
            yield d, 8
    elif isinstance(value, (tuple, list)):
        for item in value:
            yield from flatten(item)


class Tracer:
    """Event-bus subscriber that builds a TraceLog."""

    def __init__(self) -> None:
        self.log = TraceLog()
        self.segment = 0
        self._seen: set[int] = set()

    def _record(self, value: int, width: int, label: str) -> None:
        self.log.events.append(TraceEvent(len(self.log.events), self.segment, value, width, label))

    def __call__(self, event: Event) -> None:
        match event:
            case PhaseEvent(segment=segment):
                if segment in self._seen or segment < self.segment:
                    raise PhaseOrderError(f"segment {segment} after segment {self.segment}")
                self._seen.add(segment)
                self.segment = segment
            case WordEvent(value=value, width=width, label=label):
                self._record(value, width, label)
            case IntrinsicEvent(op=op, operands=operands, result=result):
                for operand in operands:
                    for v, w in flatten(operand):
                        self._record(v, w, op)
                for v, w in flatten(result):
                    self._record(v, w, f"{op}:result")


def run_traced(
    mode: TraceMode | str,
    key: bytes,
    block: bytes,
    moduli: ModuliSet | None = None,
    rng: random.Random | None = None,
) -> tuple[bytes, TraceLog]:
    mode = TraceMode(mode)
    tracer = Tracer()
    with event_bus.listening(tracer):
        if mode is TraceMode.BASELINE:
            ciphertext = aes128_encrypt_baseline(key, block)
        else:
            lookup = "tree" if mode is TraceMode.PROTECTED_TREE else "grid"
            ciphertext = aes128_encrypt_protected(key, block, moduli, rng, lookup=lookup)
    logger.debug("%s run traced %d events", mode, len(tracer.log))
    return ciphertext, tracer.log


class LeakReport(BaseModel):
    mode: str = ""
    key_hex: str
    # indexed [segment][key byte position]
    byte_hits: list[list[int]]
    byte_percent: list[float]
    # indexed [segment][schedule word]
    word_hits: list[list[int]]
    word_percent: list[float]
    # distinct key byte values found, per segment
    hit_values: list[list[int]]
    # every 8-bit value seen in the protected segments
    observed_bytes: list[int] = Field(default_factory=list)
    false_positives: list[int] = Field(default_factory=list)
    key_independent: list[int] = Field(default_factory=list)

    @property
    def protected_word_hits(self) -> int:
        return sum(sum(self.word_hits[s]) for s in PROTECTED_SEGMENTS)

    def protected_byte_values(self) -> set[int]:
        return {v for s in PROTECTED_SEGMENTS for v in self.hit_values[s]}

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def summary(self) -> str:
        lines = [f"{self.mode or 'run'} key={self.key_hex}"]
        for s in SEGMENTS:
            lines.append(
                f"  segment {s}: bytes {self.byte_percent[s]:5.1f}%  words {self.word_percent[s]:5.1f}%"
            )
        if self.false_positives:
            lines.append("  coincidental bytes: " + " ".join(f"{v:02x}" for v in self.false_positives))
        return "\n".join(lines)


def find_keys(log: TraceLog, key: bytes, schedule: bytes, *, mode: str = "") -> LeakReport:
    words = [int.from_bytes(schedule[i : i + 4], "big") for i in range(0, len(schedule), 4)]
    bytes_seen = {s: Counter() for s in SEGMENTS}
    words_seen = {s: Counter() for s in SEGMENTS}
    for e in log:
        if e.width == 8:
            bytes_seen[e.segment][e.value] += 1
        elif e.width == 32:
            words_seen[e.segment][e.value] += 1

    byte_hits = [[bytes_seen[s][b] for b in key] for s in SEGMENTS]
    word_hits = [[words_seen[s][w] for w in words] for s in SEGMENTS]
    report = LeakReport(
        mode=mode,
        key_hex=key.hex(),
        byte_hits=byte_hits,
        byte_percent=[100.0 * sum(1 for h in row if h) / len(key) for row in byte_hits],
        word_hits=word_hits,
        word_percent=[100.0 * sum(1 for h in row if h) / len(words) for row in word_hits],
        hit_values=[sorted({b for b in key if bytes_seen[s][b]}) for s in SEGMENTS],
        observed_bytes=sorted({v for s in PROTECTED_SEGMENTS for v in bytes_seen[s]}),
    )
    logger.debug("key finder: %s", report.byte_percent)
    return report


def cross_key_filter(reports: Sequence[LeakReport]) -> list[LeakReport]:
    """
    Mark protected-segment byte hits that also show up in runs whose key
    does not contain that byte; values seen in every run are constants.
    """
    if len({r.key_hex for r in reports}) < 2:
        raise NeedTwoKeys("the cross-key filter needs runs with at least two different keys")
    key_bytes = [set(bytes.fromhex(r.key_hex)) for r in reports]
    observed = [set(r.observed_bytes) for r in reports]
    common = set.intersection(*observed)

    annotated = []
    for i, report in enumerate(reports):
        flagged = {
            v
            for v in report.protected_byte_values()
            if any(v in observed[j] and v not in key_bytes[j] for j in range(len(reports)) if j != i)
        }
        annotated.append(
            report.model_copy(
                update={
                    "false_positives": sorted(flagged),
                    "key_independent": sorted(common & report.protected_byte_values()),
                }
            )
        )
    return annotated


def audit(
    mode: TraceMode | str,
    keys: Iterable[bytes],
    block: bytes,
    moduli: ModuliSet | None = None,
    rng: random.Random | None = None,
) -> list[LeakReport]:
    """Trace one run per key, search each trace and apply the cross-key filter."""
    reports = []
    for key in keys:
        _, log = run_traced(mode, key, block, moduli, rng)
        reports.append(find_keys(log, key, key_expansion(key), mode=str(TraceMode(mode))))
    return cross_key_filter(reports) if len(reports) > 1 else reports
