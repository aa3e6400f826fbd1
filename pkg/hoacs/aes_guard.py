"""
AES-128 with a residue-coded key schedule.

The baseline is a plain single-block AES-128 encryption. The protected
variant encodes the key bytes, expands the schedule entirely over encoded
bytes (rotation by permutation, substitution through an encoded lookup
table, xor by bit extraction) and decodes the round keys only once the
whole schedule exists. Both variants publish the bytes and words they touch
on the event bus, split into four segments:

    0  initialisation and key encoding
    1  the first Nk schedule words
    2  the remaining schedule words
    3  decoding and the cipher rounds
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
import logging
import random
from typing import Literal

from hoacs.errors import OutOfRange
from hoacs.events import emit_phase, emit_word, event_bus
from hoacs.rnc_containers import (
    RncGrid,
    RncTree,
    grid_from_table,
    grid_get,
    tree_from_table,
    tree_get,
)
from hoacs.rnc_core import (
    EncodedValue,
    ModuliSet,
    add_random_shift,
    check_bound,
    decode,
    encode,
    make_moduli_set,
    reduce_plain,
)
from hoacs.rnc_ops import clear_table_caches, less_than, xor_enc

logger = logging.getLogger(__name__)

Lookup = Literal["grid", "tree"]

DEFAULT_MODULI = (17, 19)
BLOCK_BYTES = 16

RCON = (0, 1, 2, 4, 8, 16, 32, 64, 128, 27, 54)

REFERENCE_KEYS = {
    "key1": "2b7eaffccbaed2a6abf7cf8b09cf4fd3",
    "key2": "b3ee5ffccbaed2ccabf7cf8bb9cf4fd3",
    "key3": "fb4e9ffbcbaed2ccabf7cfbbb9cfbfdd",
}


@dataclass(frozen=True)
class AesParams:
    nk: int = 4
    nr: int = 10
    key_bytes: int = 16

    @property
    def schedule_words(self) -> int:
        return 4 * (self.nr + 1)

    @property
    def schedule_bytes(self) -> int:
        return 4 * self.schedule_words


AES128 = AesParams()


def _rotl8(x: int, s: int) -> int:
    return ((x << s) | (x >> (8 - s))) & 0xFF


def _build_sbox() -> tuple[int, ...]:
    # walk the multiplicative group with generator 3 and its inverse together
    sbox = [0x63] * 256
    p = q = 1
    while True:
        p = p ^ ((p << 1) & 0xFF) ^ (0x1B if p & 0x80 else 0)
        for s in (1, 2, 4):
            q ^= (q << s) & 0xFF
        q ^= 0x09 if q & 0x80 else 0
        sbox[p] = q ^ _rotl8(q, 1) ^ _rotl8(q, 2) ^ _rotl8(q, 3) ^ _rotl8(q, 4) ^ 0x63
        if p == 1:
            break
    return tuple(sbox)


SBOX = _build_sbox()


def parse_hex(text: str, length: int = BLOCK_BYTES) -> bytes:
    try:
        data = bytes.fromhex(text.strip())
    except ValueError as exc:
        raise OutOfRange(f"not a hex string: {text!r}") from exc
    if len(data) != length:
        raise OutOfRange(f"expected {length} bytes, got {len(data)}")
    return data


def _check_length(data: bytes | Sequence[int], what: str, length: int = BLOCK_BYTES) -> None:
    if len(data) != length:
        raise OutOfRange(f"{what} must be {length} bytes, got {len(data)}")


def _emit_bytes(values: Sequence[int], label: str) -> None:
    for b in values:
        emit_word(b, 8, label)


def _word_bytes(word: int) -> tuple[int, int, int, int]:
    return (word >> 24) & 0xFF, (word >> 16) & 0xFF, (word >> 8) & 0xFF, word & 0xFF


def _sub_word(word: int) -> int:
    return int.from_bytes(bytes(SBOX[b] for b in _word_bytes(word)), "big")


def _rot_word(word: int) -> int:
    return ((word << 8) | (word >> 24)) & 0xFFFFFFFF


def key_expansion(key: bytes, params: AesParams = AES128) -> bytes:
    """Plain FIPS-197 schedule, publishing every word and byte it produces."""
    _check_length(key, "key", params.key_bytes)
    nk = params.nk
    emit_phase(1)
    words = []
    for i in range(nk):
        word = int.from_bytes(key[4 * i : 4 * i + 4], "big")
        emit_word(word, 32, "w")
        _emit_bytes(_word_bytes(word), "w")
        words.append(word)

    emit_phase(2)
    for i in range(nk, params.schedule_words):
        temp = words[i - 1]
        emit_word(temp, 32, "temp")
        if i % nk == 0:
            temp = _rot_word(temp)
            emit_word(temp, 32, "rot_word")
            temp = _sub_word(temp)
            emit_word(temp, 32, "sub_word")
            temp ^= RCON[i // nk] << 24
        elif nk > 6 and i % nk == 4:
            temp = _sub_word(temp)
        previous = words[i - nk]
        emit_word(previous, 32, "w")
        _emit_bytes(_word_bytes(previous), "w")
        word = previous ^ temp
        emit_word(word, 32, "w")
        _emit_bytes(_word_bytes(word), "w")
        words.append(word)
    return b"".join(w.to_bytes(4, "big") for w in words)


def _xtime(a: int) -> int:
    return ((a << 1) ^ 0x1B) & 0xFF if a & 0x80 else a << 1


def _mix_column(col: list[int]) -> list[int]:
    a0, a1, a2, a3 = col
    t = a0 ^ a1 ^ a2 ^ a3
    return [
        a0 ^ t ^ _xtime(a0 ^ a1),
        a1 ^ t ^ _xtime(a1 ^ a2),
        a2 ^ t ^ _xtime(a2 ^ a3),
        a3 ^ t ^ _xtime(a3 ^ a0),
    ]


def _add_round_key(state: list[list[int]], round_key: bytes | memoryview) -> list[list[int]]:
    for c in range(4):
        word = round_key[4 * c : 4 * c + 4]
        emit_word(int.from_bytes(word, "big"), 32, "round_key")
        _emit_bytes(word, "round_key")
    return [[state[c][r] ^ round_key[4 * c + r] for r in range(4)] for c in range(4)]


def _cipher(block: bytes, schedule: bytes | memoryview, params: AesParams = AES128) -> bytes:
    # state[c][r] holds column c, row r
    state = [[block[4 * c + r] for r in range(4)] for c in range(4)]
    state = _add_round_key(state, schedule[:16])
    for rnd in range(1, params.nr + 1):
        state = [[SBOX[b] for b in col] for col in state]
        state = [[state[(c + r) % 4][r] for r in range(4)] for c in range(4)]
        if rnd < params.nr:
            state = [_mix_column(col) for col in state]
        state = _add_round_key(state, schedule[16 * rnd : 16 * rnd + 16])
        _emit_bytes([b for col in state for b in col], "state")
    return bytes(b for col in state for b in col)


def aes128_encrypt_baseline(key: bytes, block: bytes) -> bytes:
    _check_length(key, "key")
    _check_length(block, "block")
    emit_phase(0)
    _emit_bytes(key, "key")
    schedule = key_expansion(key)
    emit_phase(3)
    _emit_bytes(block, "block")
    return _cipher(block, schedule)


@dataclass
class EncodedKeySchedule:
    moduli: ModuliSet
    encoded_bytes: list[EncodedValue] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.encoded_bytes)

    def word(self, i: int) -> list[EncodedValue]:
        return self.encoded_bytes[4 * i : 4 * i + 4]

    def decode(self) -> bytes:
        return bytes(decode(b, self.moduli) for b in self.encoded_bytes)

    def decode_into(self, buffer: bytearray) -> None:
        for b in self.encoded_bytes:
            buffer.append(decode(b, self.moduli))

    def wipe(self) -> None:
        self.encoded_bytes.clear()


def default_moduli() -> ModuliSet:
    return make_moduli_set(DEFAULT_MODULI)


def _encoded_sbox(moduli: ModuliSet) -> tuple[EncodedValue, ...]:
    with event_bus.suspended():
        return tuple(reduce_plain(s, moduli) for s in SBOX)


def sbox_grid(moduli: ModuliSet) -> RncGrid:
    return grid_from_table(_encoded_sbox(moduli), moduli)


def sbox_tree(moduli: ModuliSet) -> RncTree:
    return tree_from_table(_encoded_sbox(moduli), moduli)


def _encoded_rcon(moduli: ModuliSet) -> tuple[EncodedValue, ...]:
    with event_bus.suspended():
        return tuple(reduce_plain(rc, moduli) for rc in RCON)


def _byte_limit(moduli: ModuliSet) -> EncodedValue:
    with event_bus.suspended():
        return reduce_plain(256, moduli)


def key_expansion_enc(
    key: Sequence[EncodedValue],
    moduli: ModuliSet,
    rng: random.Random | None = None,
    *,
    lookup: Lookup = "grid",
    params: AesParams = AES128,
) -> EncodedKeySchedule:
    """
    Expand an encoded key without decoding any byte of it.

    Every xor and substitution output receives a fresh random shift when
    ``rng`` is given.
    """
    _check_length(key, "key", params.key_bytes)
    if moduli.dynamic_range < 256:
        raise OutOfRange(f"dynamic range {moduli.dynamic_range} cannot hold every byte value")
    limit = _byte_limit(moduli) if moduli.dynamic_range > 256 else None
    for b in key:
        check_bound(b, moduli)
        if limit is not None and not less_than(b, limit, moduli):
            raise OutOfRange("encoded key byte is not below 256")

    if lookup == "grid":
        grid = sbox_grid(moduli)

        def substitute(b: EncodedValue) -> EncodedValue:
            return grid_get(grid, b)

    elif lookup == "tree":
        tree = sbox_tree(moduli)

        def substitute(b: EncodedValue) -> EncodedValue:
            return tree_get(tree, b)

    else:
        raise ValueError(f"unknown lookup {lookup!r}")

    rcon = _encoded_rcon(moduli)
    nk = params.nk
    schedule = EncodedKeySchedule(moduli)
    words: list[list[EncodedValue]] = []

    emit_phase(1)
    for i in range(nk):
        words.append([add_random_shift(b, moduli, rng) for b in key[4 * i : 4 * i + 4]])

    emit_phase(2)
    for i in range(nk, params.schedule_words):
        temp = list(words[i - 1])
        if i % nk == 0:
            temp = temp[1:] + temp[:1]
            temp = [add_random_shift(substitute(b), moduli, rng) for b in temp]
            temp[0] = xor_enc(temp[0], rcon[i // nk], 8, moduli, rng)
        elif nk > 6 and i % nk == 4:
            temp = [add_random_shift(substitute(b), moduli, rng) for b in temp]
        words.append([xor_enc(a, b, 8, moduli, rng) for a, b in zip(words[i - nk], temp)])

    for word in words:
        schedule.encoded_bytes.extend(word)
    words.clear()
    logger.debug("expanded encoded schedule of %d bytes over %s", len(schedule), moduli)
    return schedule


def aes128_encrypt_protected(
    key: bytes,
    block: bytes,
    moduli: ModuliSet | None = None,
    rng: random.Random | None = None,
    *,
    lookup: Lookup = "grid",
) -> bytes:
    _check_length(key, "key")
    _check_length(block, "block")
    moduli = moduli or default_moduli()

    emit_phase(0)
    encoded_key = [encode(b, moduli, rng) for b in key]
    schedule = key_expansion_enc(encoded_key, moduli, rng, lookup=lookup)
    round_keys = bytearray()
    try:
        emit_phase(3)
        schedule.decode_into(round_keys)
        _emit_bytes(block, "block")
        with memoryview(round_keys) as view:
            return _cipher(block, view)
    finally:
        schedule.wipe()
        encoded_key.clear()
        round_keys[:] = bytes(len(round_keys))
        clear_table_caches()
