"""
Overhead microbenchmark: N plain operations against N residue-coded ones.

Each (op, variant, count) cell times both arms over the same operand stream
``repetitions`` times after one warm-up pass and reports the ratio of mean
times. Variants:

    with-rand     encoded ops that re-mask every result
    without-rand  encoded ops with the masking step disabled
    ir-path       the same ops run through the IR pass and its interpreter
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable
import csv
import logging
import operator
from pathlib import Path
import random
import time

import numpy as np
from pydantic import BaseModel, Field

from hoacs.config import BenchConfig, resolve_seed
from hoacs.errors import BenchIoError
from hoacs.hoacs_ir import interpret, parse_ir, transform
from hoacs.rnc_core import EncodedValue, ModuliSet, encode, make_moduli_set
from hoacs.rnc_ops import add_enc, eq_enc, mul_enc, neq_enc, sub_enc

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("op", "variant", "count", "mean_plain_ns", "mean_rnc_ns", "ratio")

# Average overhead ratios of the published C and IR implementations.
PUBLISHED_RATIOS = {
    "add": {"with-rand": 26.04, "without-rand": 2.57, "ir-path": 4.42},
    "sub": {"with-rand": 26.29, "without-rand": 2.79, "ir-path": 3.97},
    "mul": {"with-rand": 25.47, "without-rand": 2.59, "ir-path": 4.16},
    "eq": {"with-rand": 3.31, "without-rand": 3.03, "ir-path": 5.78},
    "ne": {"with-rand": 3.39, "without-rand": 3.26, "ir-path": 5.72},
}

_PLAIN_OPS = {
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
    "eq": operator.eq,
    "ne": operator.ne,
}


class BenchRow(BaseModel):
    op: str
    variant: str
    count: int
    mean_plain_ns: float
    mean_rnc_ns: float
    median_plain_ns: float
    median_rnc_ns: float
    var_rnc_ns: float
    samples: int
    ratio: float | None
    reason: str | None = None


class BenchReport(BaseModel):
    config: BenchConfig
    rows: list[BenchRow] = Field(default_factory=list)

    def summary(self) -> dict[str, dict[str, float | None]]:
        """Mean ratio per op and variant over every count that has one."""
        ratios: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
        for row in self.rows:
            ratios[row.op].setdefault(row.variant, [])
            if row.ratio is not None:
                ratios[row.op][row.variant].append(row.ratio)
        return {
            op: {v: (float(np.mean(r)) if r else None) for v, r in by_variant.items()}
            for op, by_variant in ratios.items()
        }

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            ratio = "" if row.ratio is None else f"{row.ratio:.4f}"
            lines.append(
                f"{row.op},{row.variant},{row.count},{row.mean_plain_ns:.1f},{row.mean_rnc_ns:.1f},{ratio}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def operand_stream(cfg: BenchConfig, op: str, count: int, repetition: int) -> list[tuple[int, int]]:
    """Operands for one timed pass; fixed by the seed, independent of timings."""
    seed = resolve_seed(cfg.seed)
    rng = random.Random(None if seed is None else f"{seed}:{op}:{count}:{repetition}")
    bound = 1 << cfg.operand_bits
    return [(rng.randrange(bound), rng.randrange(bound)) for _ in range(count)]


def _time_ns(fn: Callable[[], object]) -> int:
    start = time.perf_counter_ns()
    fn()
    return time.perf_counter_ns() - start


def _plain_pass(op: str, operands: list[tuple[int, int]]) -> Callable[[], object]:
    fn = _PLAIN_OPS[op]
    return lambda: [fn(a, b) for a, b in operands]


def _rnc_pass(
    op: str, encoded: list[tuple[EncodedValue, EncodedValue]], moduli: ModuliSet, rng: random.Random | None
) -> Callable[[], object]:
    match op:
        case "add":
            return lambda: [add_enc(a, b, moduli, rng) for a, b in encoded]
        case "sub":
            return lambda: [sub_enc(a, b, moduli, rng) for a, b in encoded]
        case "mul":
            return lambda: [mul_enc(a, b, moduli, rng) for a, b in encoded]
        case "eq":
            return lambda: [eq_enc(a, b, moduli) for a, b in encoded]
        case _:
            return lambda: [neq_enc(a, b, moduli) for a, b in encoded]


def _ir_program(op: str, count: int) -> str:
    lines = ["func @bench(%rnc_a: u32, %b: u32) {"]
    lines += [f"  %r{i} = {op} u32 %rnc_a, %b" for i in range(count)]
    lines += ["  ret u32 %b", "}"]
    return "\n".join(lines) + "\n"


def _ir_passes(
    op: str, count: int, operands: list[tuple[int, int]], seed: int | None
) -> tuple[Callable[[], object], Callable[[], object]]:
    plain = parse_ir(_ir_program(op, count))
    protected = transform(plain, seed=seed)
    first = operands[0] if operands else (0, 0)
    return (lambda: interpret(plain, first)), (lambda: interpret(protected, first))


def _measure(
    cfg: BenchConfig, moduli: ModuliSet, op: str, variant: str, count: int
) -> tuple[list[int], list[int]]:
    seed = resolve_seed(cfg.seed)
    shift_rng = random.Random(seed) if variant == "with-rand" else None
    plain_ns, rnc_ns = [], []
    # repetition -1 is the warm-up and is discarded
    for repetition in range(-1, cfg.repetitions):
        operands = operand_stream(cfg, op, count, repetition)
        if variant == "ir-path":
            plain_fn, rnc_fn = _ir_passes(op, count, operands, seed)
        else:
            encoded = [(encode(a, moduli, shift_rng), encode(b, moduli, shift_rng)) for a, b in operands]
            plain_fn = _plain_pass(op, operands)
            rnc_fn = _rnc_pass(op, encoded, moduli, shift_rng)
        p, r = _time_ns(plain_fn), _time_ns(rnc_fn)
        if repetition >= 0:
            plain_ns.append(p)
            rnc_ns.append(r)
    return plain_ns, rnc_ns


def bench_run(cfg: BenchConfig, progress: Callable[[BenchRow], None] | None = None) -> BenchReport:
    moduli = make_moduli_set(cfg.moduli)
    if moduli.dynamic_range <= (1 << cfg.operand_bits) ** 2:
        logger.warning("moduli %s cannot hold every %d-bit product", moduli, cfg.operand_bits)
    report = BenchReport(config=cfg)

    for op in cfg.ops:
        for variant in cfg.variants:
            for count in cfg.counts:
                plain_ns, rnc_ns = _measure(cfg, moduli, op, variant, count)
                mean_plain, mean_rnc = float(np.mean(plain_ns)), float(np.mean(rnc_ns))
                ratio, reason = None, None
                if count == 0:
                    reason = "no instructions executed"
                elif mean_plain <= 0:
                    reason = "plain time below timer resolution"
                else:
                    ratio = mean_rnc / mean_plain
                row = BenchRow(
                    op=op,
                    variant=variant,
                    count=count,
                    mean_plain_ns=mean_plain,
                    mean_rnc_ns=mean_rnc,
                    median_plain_ns=float(np.median(plain_ns)),
                    median_rnc_ns=float(np.median(rnc_ns)),
                    var_rnc_ns=float(np.var(rnc_ns)),
                    samples=len(rnc_ns),
                    ratio=ratio,
                    reason=reason,
                )
                logger.info("bench %s %s n=%d ratio=%s", op, variant, count, ratio)
                report.rows.append(row)
                if progress is not None:
                    progress(row)

    if cfg.output is not None:
        write_report(report, cfg.output)
    return report


def write_report(report: BenchReport, directory: Path) -> tuple[Path, Path]:
    directory = Path(directory)
    csv_path, json_path = directory / "bench.csv", directory / "bench.json"
    try:
        directory.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(report.to_csv())
        json_path.write_text(report.to_json())
    except OSError as exc:
        raise BenchIoError(f"cannot write bench report to {directory}: {exc}") from exc
    return csv_path, json_path


def read_csv(path: Path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
