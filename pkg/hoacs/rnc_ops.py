"""
Homomorphic operations on encoded values.

Every binary operation follows the same three steps: drop the random
multiples of both operands, combine residues component by component, then
mask the result again when a random source is supplied. Comparisons return
plain booleans.
"""

from __future__ import annotations

from functools import lru_cache
import logging
import math
import random

from hoacs.errors import DivisionByZero, NoModularInverse, OutOfRange, Overflow, Underflow
from hoacs.events import event_bus, intrinsic
from hoacs.rnc_core import (
    EncodedValue,
    ModuliSet,
    add_random_shift,
    check_bound,
    decode,
    encode,
    signed_offset,
    to_mixed_radix,
)

logger = logging.getLogger(__name__)


def _pair(x: EncodedValue, y: EncodedValue, moduli: ModuliSet) -> tuple[tuple[int, ...], tuple[int, ...]]:
    check_bound(x, moduli)
    check_bound(y, moduli)
    return x.canonical_components(), y.canonical_components()


def _finish(components: list[int], moduli: ModuliSet, rng: random.Random | None) -> EncodedValue:
    return add_random_shift(EncodedValue(tuple(components), moduli.identity), moduli, rng)


@lru_cache(maxsize=32)
def _constants(moduli: ModuliSet) -> tuple[EncodedValue, EncodedValue]:
    with event_bus.suspended():
        return encode(0, moduli), encode(1, moduli)


@lru_cache(maxsize=32)
def _powers_of_two(moduli: ModuliSet, bit_width: int) -> tuple[EncodedValue, ...]:
    with event_bus.suspended():
        return tuple(encode(1 << i, moduli) for i in range(bit_width))


def clear_table_caches() -> None:
    """Drop every cached encoding derived from a moduli set."""
    for cache in (_constants, _powers_of_two, _offset):
        cache.cache_clear()
    logger.debug("cleared moduli-derived constant tables")


@intrinsic("add")
def add_enc(
    x: EncodedValue,
    y: EncodedValue,
    moduli: ModuliSet,
    rng: random.Random | None = None,
    *,
    checked: bool = False,
) -> EncodedValue:
    a, b = _pair(x, y, moduli)
    result = _finish([(p + q) % m for p, q, m in zip(a, b, moduli.moduli)], moduli, rng)
    if checked and less_than(result, x, moduli):
        raise Overflow(f"addition wrapped past {moduli.dynamic_range}")
    return result


@intrinsic("sub")
def sub_enc(
    x: EncodedValue,
    y: EncodedValue,
    moduli: ModuliSet,
    rng: random.Random | None = None,
    *,
    checked: bool = False,
) -> EncodedValue:
    if checked and less_than(x, y, moduli):
        raise Underflow("subtrahend is larger than minuend")
    a, b = _pair(x, y, moduli)
    return _finish([(p - q) % m for p, q, m in zip(a, b, moduli.moduli)], moduli, rng)


@intrinsic("mul")
def mul_enc(
    x: EncodedValue,
    y: EncodedValue,
    moduli: ModuliSet,
    rng: random.Random | None = None,
    *,
    checked: bool = False,
) -> EncodedValue:
    a, b = _pair(x, y, moduli)
    if checked and __debug__:
        # No homomorphic overflow test exists for products; the debug build asks the oracle.
        if decode(x, moduli) * decode(y, moduli) >= moduli.dynamic_range:
            raise Overflow(f"product exceeds {moduli.dynamic_range}")
    return _finish([(p * q) % m for p, q, m in zip(a, b, moduli.moduli)], moduli, rng)


@intrinsic("shl")
def shl_enc(
    x: EncodedValue,
    n: int,
    moduli: ModuliSet,
    rng: random.Random | None = None,
    *,
    checked: bool = False,
) -> EncodedValue:
    if n < 0:
        raise OutOfRange(f"negative shift amount {n}")
    check_bound(x, moduli)
    if checked and __debug__:
        if decode(x, moduli) << n >= moduli.dynamic_range:
            raise Overflow(f"shift exceeds {moduli.dynamic_range}")
    return _finish(
        [(u * pow(2, n, m)) % m for u, m in zip(x.canonical_components(), moduli.moduli)],
        moduli,
        rng,
    )


@intrinsic("less_than")
def less_than(x: EncodedValue, y: EncodedValue, moduli: ModuliSet) -> bool:
    """Compare mixed-radix digits from the most significant position down."""
    dx = to_mixed_radix(x, moduli).digits
    dy = to_mixed_radix(y, moduli).digits
    for p, q in zip(reversed(dx), reversed(dy)):
        if p != q:
            return p < q
    return False


def less_than_by_decode(x: EncodedValue, y: EncodedValue, moduli: ModuliSet) -> bool:
    return decode(x, moduli) < decode(y, moduli)


@intrinsic("eq")
def eq_enc(x: EncodedValue, y: EncodedValue, moduli: ModuliSet) -> bool:
    a, b = _pair(x, y, moduli)
    return a == b


@intrinsic("neq")
def neq_enc(x: EncodedValue, y: EncodedValue, moduli: ModuliSet) -> bool:
    return not eq_enc(x, y, moduli)


@intrinsic("div_int")
def div_int(
    x: EncodedValue,
    y: EncodedValue,
    moduli: ModuliSet,
    rng: random.Random | None = None,
) -> tuple[EncodedValue, EncodedValue]:
    """
    Quotient and remainder by repeated subtraction.

    The divisor is doubled while it neither wraps around M nor exceeds the
    numerator, then the multiples are subtracted from the largest down.
    """
    check_bound(x, moduli)
    zero, one = _constants(moduli)
    if eq_enc(y, zero, moduli):
        raise DivisionByZero("divisor decodes to zero")

    remainder = x
    multiples = [(y, one)]
    while True:
        d, q = multiples[-1]
        doubled = add_enc(d, d, moduli)
        if less_than(doubled, d, moduli) or less_than(remainder, doubled, moduli):
            break
        multiples.append((doubled, add_enc(q, q, moduli)))

    logger.debug("div_int: %d doublings of the divisor", len(multiples) - 1)
    quotient = zero
    for d, q in reversed(multiples):
        if not less_than(remainder, d, moduli):
            remainder = sub_enc(remainder, d, moduli)
            quotient = add_enc(quotient, q, moduli)
    return add_random_shift(quotient, moduli, rng), add_random_shift(remainder, moduli, rng)


def div_int_linear(
    x: EncodedValue, y: EncodedValue, moduli: ModuliSet
) -> tuple[EncodedValue, EncodedValue]:
    zero, one = _constants(moduli)
    if eq_enc(y, zero, moduli):
        raise DivisionByZero("divisor decodes to zero")
    remainder, quotient = x, zero
    while not less_than(remainder, y, moduli):
        remainder = sub_enc(remainder, y, moduli)
        quotient = add_enc(quotient, one, moduli)
    return quotient, remainder


@intrinsic("mod")
def mod_enc(
    x: EncodedValue,
    y: EncodedValue,
    moduli: ModuliSet,
    rng: random.Random | None = None,
) -> EncodedValue:
    return div_int(x, y, moduli, rng)[1]


@intrinsic("div_exact")
def div_exact(
    x: EncodedValue,
    y: EncodedValue,
    moduli: ModuliSet,
    rng: random.Random | None = None,
) -> EncodedValue:
    """
    Divide by multiplying with the per-modulus inverse of the divisor.

    Only exact when y divides x; otherwise the result is the v with
    y * v == x (mod M), which is not the floor quotient.
    """
    a, b = _pair(x, y, moduli)
    out = []
    for p, q, m in zip(a, b, moduli.moduli):
        if math.gcd(q, m) != 1:
            raise NoModularInverse(f"divisor residue {q} has no inverse modulo {m}")
        out.append((p * pow(q, -1, m)) % m)
    return _finish(out, moduli, rng)


@intrinsic("pow")
def pow_enc(
    x: EncodedValue,
    n: int,
    moduli: ModuliSet,
    rng: random.Random | None = None,
) -> EncodedValue:
    if n < 0:
        raise OutOfRange(f"negative exponent {n}")
    check_bound(x, moduli)
    result = _constants(moduli)[1]
    base = x
    while n:
        if n & 1:
            result = mul_enc(result, base, moduli)
        n >>= 1
        if n:
            base = mul_enc(base, base, moduli)
    return add_random_shift(result, moduli, rng)


def _bits(x: EncodedValue, bit_width: int, moduli: ModuliSet) -> list[EncodedValue]:
    # most significant first; each bit is encode(0) or encode(1)
    zero, one = _constants(moduli)
    powers = _powers_of_two(moduli, bit_width)
    remainder = x
    bits = []
    for i in reversed(range(bit_width)):
        bit = zero if less_than(remainder, powers[i], moduli) else one
        remainder = sub_enc(remainder, mul_enc(bit, powers[i], moduli), moduli)
        bits.append(bit)
    if not eq_enc(remainder, zero, moduli):
        raise OutOfRange(f"operand does not fit in {bit_width} bits")
    return bits


def _bitwise(
    x: EncodedValue,
    y: EncodedValue,
    bit_width: int,
    moduli: ModuliSet,
    rng: random.Random | None,
    scale: int,
) -> EncodedValue:
    # a + b - scale*a*b: scale 2 gives xor, scale 1 gives or
    check_bound(x, moduli)
    check_bound(y, moduli)
    if bit_width < 1 or 1 << bit_width > moduli.dynamic_range:
        raise OutOfRange(f"2^{bit_width} exceeds the dynamic range {moduli.dynamic_range}")
    result = _constants(moduli)[0]
    for a, b in zip(_bits(x, bit_width, moduli), _bits(y, bit_width, moduli)):
        both = mul_enc(a, b, moduli)
        bit = sub_enc(add_enc(a, b, moduli), shl_enc(both, scale - 1, moduli), moduli)
        result = add_enc(shl_enc(result, 1, moduli), bit, moduli)
    return add_random_shift(result, moduli, rng)


@intrinsic("xor")
def xor_enc(
    x: EncodedValue,
    y: EncodedValue,
    bit_width: int,
    moduli: ModuliSet,
    rng: random.Random | None = None,
) -> EncodedValue:
    return _bitwise(x, y, bit_width, moduli, rng, scale=2)


@intrinsic("or")
def or_enc(
    x: EncodedValue,
    y: EncodedValue,
    bit_width: int,
    moduli: ModuliSet,
    rng: random.Random | None = None,
) -> EncodedValue:
    return _bitwise(x, y, bit_width, moduli, rng, scale=1)


@lru_cache(maxsize=32)
def _offset(moduli: ModuliSet) -> EncodedValue:
    with event_bus.suspended():
        return encode(signed_offset(moduli), moduli)


def add_signed(
    x: EncodedValue, y: EncodedValue, moduli: ModuliSet, rng: random.Random | None = None
) -> EncodedValue:
    """Add two offset encodings: (a + o) + (b + o) - o."""
    return sub_enc(add_enc(x, y, moduli), _offset(moduli), moduli, rng)


def sub_signed(
    x: EncodedValue, y: EncodedValue, moduli: ModuliSet, rng: random.Random | None = None
) -> EncodedValue:
    return add_enc(sub_enc(x, y, moduli), _offset(moduli), moduli, rng)
