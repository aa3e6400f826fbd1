"""
Residue number coding primitives.

A value v in [0, M) is carried as its residues v mod m_i over a set of
pairwise-coprime moduli. Each residue may additionally be masked with a
random multiple of its modulus (u_i = v_i + r_i * m_i); masking never
changes the value a component stands for.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import logging
import math
import random
from collections.abc import Iterable, Sequence

from hoacs.errors import (
    InvalidModuli,
    ModuliMismatch,
    ModulusTooSmall,
    NoModularInverse,
    NotCoprime,
    OutOfRange,
)
from hoacs.events import intrinsic

logger = logging.getLogger(__name__)

# Upper bound (exclusive) for the random multiplier r of a masked component.
SHIFT_MULTIPLIER_BOUND = 1 << 16
MODULUS_LIMIT = 1 << 32
WORD_BITS = 64


def extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y == g == gcd(a, b)."""
    if a < 0 or b < 0 or (a == 0 and b == 0):
        raise ValueError(f"extended_gcd needs non-negative arguments, not both zero: {a}, {b}")
    if a == 0:
        return b, 0, 1
    g, x1, y1 = extended_gcd(b % a, a)
    return g, y1 - (b // a) * x1, x1


def mod_inverse(a: int, m: int) -> int:
    g, x, _ = extended_gcd(a % m, m)
    if g != 1:
        raise NoModularInverse(f"{a} has no inverse modulo {m}")
    return x % m


@dataclass(frozen=True)
class ModuliSet:
    moduli: tuple[int, ...]
    dynamic_range: int
    # (M_i, alpha_i) per modulus: M_i = M / m_i, alpha_i = M_i^-1 mod m_i
    crt_weights: tuple[tuple[int, int], ...]
    # mrc_inverses[i][j] = m_i^-1 mod m_j for i < j
    mrc_inverses: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.moduli)

    @property
    def identity(self) -> tuple[int, ...]:
        return self.moduli

    @cached_property
    def radix_weights(self) -> tuple[int, ...]:
        weights = [1]
        for m in self.moduli[:-1]:
            weights.append(weights[-1] * m)
        return tuple(weights)

    def __str__(self) -> str:
        return ",".join(str(m) for m in self.moduli)


def make_moduli_set(moduli: Iterable[int]) -> ModuliSet:
    values = [int(m) for m in moduli]
    if not values:
        raise InvalidModuli("at least one modulus is required")
    for m in values:
        if m < 2:
            raise ModulusTooSmall(m)
        if m >= MODULUS_LIMIT:
            raise InvalidModuli(f"modulus {m} does not fit in 32 bits")
    for i, a in enumerate(values):
        for b in values[i + 1 :]:
            if math.gcd(a, b) != 1:
                raise NotCoprime(a, b)

    ordered = tuple(sorted(values))
    dynamic_range = math.prod(ordered)
    weights = []
    for m in ordered:
        big_m = dynamic_range // m
        weights.append((big_m, mod_inverse(big_m, m)))
    inverses = tuple(
        tuple(mod_inverse(ordered[i], ordered[j]) if j > i else 0 for j in range(len(ordered)))
        for i in range(len(ordered))
    )
    logger.debug("moduli set %s, dynamic range %d", ordered, dynamic_range)
    return ModuliSet(ordered, dynamic_range, tuple(weights), inverses)


def parse_moduli(text: str) -> ModuliSet:
    """Build a set from a comma-separated list such as ``"17,19"``."""
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InvalidModuli(f"cannot parse moduli {text!r}") from exc
    return make_moduli_set(values)


@dataclass(frozen=True, eq=False)
class EncodedValue:
    components: tuple[int, ...]
    moduli_id: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.components) != len(self.moduli_id):
            raise ModuliMismatch(
                f"{len(self.components)} components for {len(self.moduli_id)} moduli"
            )
        for u in self.components:
            if u < 0 or u.bit_length() > WORD_BITS:
                raise OutOfRange(f"component {u} does not fit a {WORD_BITS}-bit word")

    def canonical_components(self) -> tuple[int, ...]:
        return tuple(u % m for u, m in zip(self.components, self.moduli_id))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EncodedValue):
            return NotImplemented
        return (
            self.moduli_id == other.moduli_id
            and self.canonical_components() == other.canonical_components()
        )

    def __hash__(self) -> int:
        return hash((self.moduli_id, self.canonical_components()))

    def __str__(self) -> str:
        return ",".join(str(u) for u in self.components)


@dataclass(frozen=True)
class MixedRadixDigits:
    digits: tuple[int, ...]
    weights: tuple[int, ...]

    def value(self) -> int:
        return sum(d * w for d, w in zip(self.digits, self.weights))


def check_bound(x: EncodedValue, moduli: ModuliSet) -> None:
    if x.moduli_id != moduli.identity:
        raise ModuliMismatch(f"value encoded over {x.moduli_id} used with {moduli.moduli}")


@intrinsic("add_random_shift")
def add_random_shift(
    x: EncodedValue,
    moduli: ModuliSet,
    rng: random.Random | None = None,
    *,
    multipliers: Sequence[int] | None = None,
) -> EncodedValue:
    """Mask every component with r_i * m_i; identity when neither rng nor multipliers is given."""
    check_bound(x, moduli)
    if multipliers is None:
        if rng is None:
            return x
        multipliers = [rng.randrange(SHIFT_MULTIPLIER_BOUND) for _ in moduli.moduli]
    if len(multipliers) != moduli.count:
        raise ModuliMismatch(f"{len(multipliers)} multipliers for {moduli.count} moduli")
    shifted = []
    for u, m, r in zip(x.components, moduli.moduli, multipliers):
        if not 0 <= r < SHIFT_MULTIPLIER_BOUND:
            raise OutOfRange(f"shift multiplier {r} outside [0, {SHIFT_MULTIPLIER_BOUND})")
        shifted.append(u % m + r * m)
    return EncodedValue(tuple(shifted), x.moduli_id)


@intrinsic("canonicalize")
def canonicalize(x: EncodedValue, moduli: ModuliSet) -> EncodedValue:
    check_bound(x, moduli)
    return EncodedValue(x.canonical_components(), x.moduli_id)


def from_residues(residues: Sequence[int], moduli: ModuliSet) -> EncodedValue:
    return EncodedValue(tuple(residues), moduli.identity)


def _residues(v: int, moduli: ModuliSet) -> EncodedValue:
    return EncodedValue(tuple(v % m for m in moduli.moduli), moduli.identity)


@intrinsic("encode")
def encode(v: int, moduli: ModuliSet, rng: random.Random | None = None) -> EncodedValue:
    if not 0 <= v < moduli.dynamic_range:
        raise OutOfRange(f"{v} outside [0, {moduli.dynamic_range})")
    return add_random_shift(_residues(v, moduli), moduli, rng)


def reduce_plain(v: int, moduli: ModuliSet) -> EncodedValue:
    """Residues of a plain integer without masking (the appendix modulus operation)."""
    return encode(v, moduli)


@intrinsic("decode")
def decode(x: EncodedValue, moduli: ModuliSet) -> int:
    check_bound(x, moduli)
    total = 0
    for u, m, (big_m, alpha) in zip(x.components, moduli.moduli, moduli.crt_weights):
        total += big_m * ((alpha * (u % m)) % m)
    return total % moduli.dynamic_range


def decode_garner(x: EncodedValue, moduli: ModuliSet) -> int:
    """Two-modulus decode exactly as the reference library does it (cross-check oracle)."""
    check_bound(x, moduli)
    if moduli.count != 2:
        raise ModuliMismatch("the two-modulus decode needs exactly two moduli")
    m1, m2 = moduli.moduli
    _, inv, _ = extended_gcd(m1, m2)
    v1 = x.components[0] % m1
    v2 = (x.components[1] - v1) * inv
    while v2 < 0:
        v2 += m2
    v2 %= m2
    return (v1 + v2 * m1) % moduli.dynamic_range


@intrinsic("to_mixed_radix")
def to_mixed_radix(x: EncodedValue, moduli: ModuliSet) -> MixedRadixDigits:
    check_bound(x, moduli)
    residues = list(x.canonical_components())
    digits = []
    for i, m in enumerate(moduli.moduli):
        d = residues[i] % m
        digits.append(d)
        for j in range(i + 1, moduli.count):
            residues[j] = ((residues[j] - d) * moduli.mrc_inverses[i][j]) % moduli.moduli[j]
    return MixedRadixDigits(tuple(digits), moduli.radix_weights)


def from_mixed_radix(digits: MixedRadixDigits) -> int:
    return digits.value()


def signed_offset(moduli: ModuliSet) -> int:
    return moduli.dynamic_range // 2


def encode_signed(v: int, moduli: ModuliSet, rng: random.Random | None = None) -> EncodedValue:
    """Slide [-floor(M/2), ceil(M/2)) onto [0, M) by adding the offset floor(M/2)."""
    offset = signed_offset(moduli)
    if not -offset <= v < moduli.dynamic_range - offset:
        raise OutOfRange(f"{v} outside the signed range of {moduli}")
    return encode(v + offset, moduli, rng)


def decode_signed(x: EncodedValue, moduli: ModuliSet) -> int:
    return decode(x, moduli) - signed_offset(moduli)
