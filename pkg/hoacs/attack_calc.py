"""Closed-form cost estimates for attacking residue-coded registers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
import logging
import math
import sys

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

_LOG_FLOAT_MAX = math.log(sys.float_info.max)

# Testing times reported alongside the published experiment, in minutes.
PUBLISHED_MINUTES = {"combinational": 9.44, "sequential": 2.89}


class TrojanModel(StrEnum):
    COMBINATIONAL = "combinational"
    SEQUENTIAL = "sequential"


class AttackParams(BaseModel):
    b: int = Field(32, ge=0, le=64, description="data register width in bits")
    t_exec: float = Field(66, gt=0, description="encoding duration in cycles")
    s_cpu: float = Field(4e9, gt=0, description="clock rate in Hz")
    n_dr: int = Field(8, ge=1, description="number of data registers")
    gamma: int = Field(5, ge=1, description="states of a sequential trigger")
    m: int = Field(65537, ge=2, description="largest modulus")
    k: int = Field(2, ge=1, description="number of moduli")


@dataclass(frozen=True)
class BruteForceEstimate:
    ops: float
    log10_ops: float
    crt_term: float
    overflow: bool


def brute_force_cost(m: int, k: int) -> BruteForceEstimate:
    """
    Operations to guess k unknown moduli up to m and solve the CRT for each
    guess: m**k * k * ln(m)**2. Returns ``inf`` with ``overflow`` set when
    the count leaves the float range.
    """
    if m < 2 or k < 1:
        raise ValueError(f"need m >= 2 and k >= 1, got m={m}, k={k}")
    ln_m = math.log(m)
    crt_term = k * ln_m**2
    ln_ops = k * ln_m + math.log(crt_term)
    if ln_ops >= _LOG_FLOAT_MAX:
        return BruteForceEstimate(math.inf, ln_ops / math.log(10), crt_term, True)
    return BruteForceEstimate(float(m**k) * crt_term, ln_ops / math.log(10), crt_term, False)


def trojan_test_time(p: AttackParams, model: TrojanModel | str = TrojanModel.COMBINATIONAL) -> float:
    """Seconds to exhaust every register value: N_DR * 2**b * T_exec / S_cpu, times gamma if sequential."""
    model = TrojanModel(model)
    seconds = (p.n_dr * (1 << p.b) * p.t_exec) / p.s_cpu
    if model is TrojanModel.SEQUENTIAL:
        seconds *= p.gamma
    return seconds


class AttackReport(BaseModel):
    params: AttackParams
    combinational_s: float
    sequential_s: float
    brute_force_ops: float
    brute_force_log10: float
    brute_force_overflow: bool
    crt_term: float
    published_minutes: dict[str, float] = Field(default_factory=lambda: dict(PUBLISHED_MINUTES))
    notes: list[str] = Field(default_factory=list)


def attack_report(p: AttackParams) -> AttackReport:
    combinational = trojan_test_time(p, TrojanModel.COMBINATIONAL)
    sequential = trojan_test_time(p, TrojanModel.SEQUENTIAL)
    cost = brute_force_cost(p.m, p.k)
    notes = [
        f"combinational: {combinational / 60:.2f} min computed, "
        f"{PUBLISHED_MINUTES['combinational']} min published",
        f"sequential (gamma={p.gamma}): {sequential / 60:.2f} min computed, "
        f"{PUBLISHED_MINUTES['sequential']} min published; the formula gives combinational x gamma",
    ]
    logger.debug("attack report for %s", p)
    return AttackReport(
        params=p,
        combinational_s=combinational,
        sequential_s=sequential,
        brute_force_ops=cost.ops,
        brute_force_log10=cost.log10_ops,
        brute_force_overflow=cost.overflow,
        crt_term=cost.crt_term,
        notes=notes,
    )
