"""Runtime configuration: seeds and benchmark settings."""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
import random
from typing import Any

from pydantic import BaseModel, Field, field_validator

from hoacs.errors import BenchConfigError, BenchIoError

logger = logging.getLogger(__name__)

SEED_ENV = "HOACS_SEED"

BENCH_OPS = ("add", "sub", "mul", "eq", "ne")
BENCH_VARIANTS = ("with-rand", "without-rand", "ir-path")


def resolve_seed(seed: int | None = None) -> int | None:
    """Explicit seed first, then ``$HOACS_SEED``, else None (unseeded)."""
    if seed is not None:
        return seed
    raw = os.environ.get(SEED_ENV, "").strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", SEED_ENV, raw)
        return None


def make_rng(seed: int | None = None) -> random.Random:
    return random.Random(resolve_seed(seed))


class BenchConfig(BaseModel):
    ops: list[str] = Field(default_factory=lambda: list(BENCH_OPS))
    counts: list[int] = Field(default_factory=lambda: [0, 250, 500, 750, 1000])
    repetitions: int = Field(30, ge=1)
    variants: list[str] = Field(default_factory=lambda: list(BENCH_VARIANTS))
    moduli: list[int] = Field(default_factory=lambda: [65536, 65537])
    operand_bits: int = Field(16, ge=1, le=32)
    seed: int | None = None
    output: Path | None = None

    @field_validator("ops")
    @classmethod
    def _known_ops(cls, ops: list[str]) -> list[str]:
        unknown = sorted(set(ops) - set(BENCH_OPS))
        if unknown:
            raise ValueError(f"unknown ops: {', '.join(unknown)}")
        return ops

    @field_validator("variants")
    @classmethod
    def _known_variants(cls, variants: list[str]) -> list[str]:
        unknown = sorted(set(variants) - set(BENCH_VARIANTS))
        if unknown:
            raise ValueError(f"unknown variants: {', '.join(unknown)}")
        return variants

    @field_validator("counts")
    @classmethod
    def _non_negative(cls, counts: list[int]) -> list[int]:
        if any(c < 0 for c in counts):
            raise ValueError("instruction counts must be non-negative")
        return counts


_LIST_FIELDS = {"ops", "counts", "variants", "moduli"}


def _parse_key_values(text: str) -> dict[str, Any]:
    data: dict[str, Any] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {line!r}")
        key, value = key.strip(), value.strip()
        if key in _LIST_FIELDS:
            data[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            data[key] = value
    return data


def load_bench_config(path: Path, **overrides: Any) -> BenchConfig:
    """Read a JSON or key=value config file; ``overrides`` that are not None win."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BenchIoError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text) if text.lstrip().startswith("{") else _parse_key_values(text)
    except ValueError as exc:
        raise BenchConfigError(f"cannot parse {path}: {exc}") from exc
    data.update({k: v for k, v in overrides.items() if v is not None})
    return BenchConfig.model_validate(data)
