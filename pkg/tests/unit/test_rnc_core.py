"""Unit tests for the residue coding primitives."""

import logging
import random

from hypothesis import given, settings, strategies as st
import pytest

from hoacs.errors import (
    InvalidModuli,
    ModuliMismatch,
    ModulusTooSmall,
    NoModularInverse,
    NotCoprime,
    OutOfRange,
)
from hoacs.events import IntrinsicEvent, event_bus
from hoacs.rnc_core import (
    SHIFT_MULTIPLIER_BOUND,
    EncodedValue,
    ModuliSet,
    add_random_shift,
    canonicalize,
    decode,
    decode_garner,
    decode_signed,
    encode,
    encode_signed,
    extended_gcd,
    from_mixed_radix,
    from_residues,
    make_moduli_set,
    mod_inverse,
    parse_moduli,
    reduce_plain,
    to_mixed_radix,
)


class TestExtendedGcd:
    """Test the Bezout helper and modular inverses."""

    def test_coprime_pair(self) -> None:
        """Test the coefficients for 17 and 19."""
        assert extended_gcd(17, 19) == (1, 9, -8)

    def test_zero_first_argument(self) -> None:
        """Test gcd(0, b) is b with coefficients (0, 1)."""
        assert extended_gcd(0, 7) == (7, 0, 1)

    def test_both_zero_rejected(self) -> None:
        """Test gcd(0, 0) is undefined."""
        with pytest.raises(ValueError):
            extended_gcd(0, 0)

    @given(st.integers(0, 10**6), st.integers(1, 10**6))
    def test_bezout_identity(self, a: int, b: int) -> None:
        """Test a*x + b*y == g for arbitrary inputs."""
        g, x, y = extended_gcd(a, b)
        assert a * x + b * y == g
        assert a % g == 0 and b % g == 0

    def test_mod_inverse(self) -> None:
        """Test the inverse of 17 modulo 19."""
        assert mod_inverse(17, 19) == 9
        assert (17 * 9) % 19 == 1

    def test_mod_inverse_missing(self) -> None:
        """Test non-coprime arguments have no inverse."""
        with pytest.raises(NoModularInverse):
            mod_inverse(6, 9)


class TestModuliSet:
    """Test validation and precomputation of moduli sets."""

    def test_small_set(self, small_moduli: ModuliSet) -> None:
        """Test range and CRT weights of {17, 19}."""
        assert small_moduli.moduli == (17, 19)
        assert small_moduli.dynamic_range == 323
        assert small_moduli.crt_weights == ((19, 9), (17, 9))
        assert small_moduli.mrc_inverses[0][1] == 9
        assert small_moduli.radix_weights == (1, 17)
        assert str(small_moduli) == "17,19"

    def test_sorted_on_construction(self) -> None:
        """Test moduli are stored in ascending order."""
        assert make_moduli_set([19, 17]).moduli == (17, 19)

    def test_equal_sets_are_interchangeable(self) -> None:
        """Test two sets built from the same moduli compare and hash equal."""
        a, b = make_moduli_set([17, 19]), make_moduli_set([19, 17])
        assert a == b
        assert hash(a) == hash(b)

    def test_not_coprime_reports_first_pair(self) -> None:
        """Test the first offending pair in input order is reported."""
        with pytest.raises(NotCoprime) as exc:
            make_moduli_set([6, 35, 10])
        assert exc.value.pair == (6, 10)

    def test_modulus_too_small(self) -> None:
        """Test a modulus below 2 is rejected."""
        with pytest.raises(ModulusTooSmall):
            make_moduli_set([1, 7])

    def test_empty_set(self) -> None:
        """Test an empty set is rejected."""
        with pytest.raises(InvalidModuli):
            make_moduli_set([])

    def test_modulus_must_fit_32_bits(self) -> None:
        """Test moduli of 2**32 and above are rejected."""
        with pytest.raises(InvalidModuli):
            make_moduli_set([1 << 32, 3])

    def test_parse_moduli(self) -> None:
        """Test the comma-separated form."""
        assert parse_moduli(" 65537, 65536 ").moduli == (65536, 65537)

    def test_parse_moduli_garbage(self) -> None:
        """Test unparsable text raises InvalidModuli."""
        with pytest.raises(InvalidModuli):
            parse_moduli("17,x")

    def test_logs_dynamic_range(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test the accepted set is logged at debug level."""
        with caplog.at_level(logging.DEBUG, logger="hoacs.rnc_core"):
            make_moduli_set([19, 17])
        assert "dynamic range 323" in caplog.text


class TestEncodedValue:
    """Test construction and semantic equality of encoded values."""

    def test_component_count_must_match(self) -> None:
        """Test the component count is checked against the moduli."""
        with pytest.raises(ModuliMismatch):
            EncodedValue((1, 2, 3), (17, 19))

    def test_component_must_fit_word(self) -> None:
        """Test components wider than 64 bits are rejected."""
        with pytest.raises(OutOfRange):
            EncodedValue((1 << 64, 0), (17, 19))

    def test_equality_ignores_shift(self) -> None:
        """Test masked and unmasked forms of one value are equal."""
        plain = EncodedValue((5, 18), (17, 19))
        masked = EncodedValue((5 + 3 * 17, 18 + 40 * 19), (17, 19))
        assert plain == masked
        assert hash(plain) == hash(masked)
        assert len({plain, masked}) == 1

    def test_different_moduli_not_equal(self) -> None:
        """Test the same components over other moduli differ."""
        assert EncodedValue((1, 1), (17, 19)) != EncodedValue((1, 1), (5, 7))

    def test_str(self) -> None:
        """Test the printed form is the raw components."""
        assert str(EncodedValue((22, 56), (17, 19))) == "22,56"


class TestEncodeDecode:
    """Test encoding, masking and both decode paths."""

    def test_worked_example(self, small_moduli: ModuliSet) -> None:
        """Test 56 over {17, 19} has residues (5, 18)."""
        x = encode(56, small_moduli)
        assert x.components == (5, 18)
        assert decode(x, small_moduli) == 56

    def test_explicit_multipliers(self, small_moduli: ModuliSet) -> None:
        """Test masking with fixed multipliers."""
        x = add_random_shift(encode(56, small_moduli), small_moduli, multipliers=[1, 2])
        assert x.components == (22, 56)
        assert decode(x, small_moduli) == 56

    def test_no_rng_means_no_shift(self, small_moduli: ModuliSet) -> None:
        """Test the identity behaviour without a random source."""
        x = encode(56, small_moduli)
        assert add_random_shift(x, small_moduli) is x

    def test_multiplier_bound(self, small_moduli: ModuliSet) -> None:
        """Test multipliers must lie in [0, 2**16)."""
        with pytest.raises(OutOfRange):
            add_random_shift(encode(1, small_moduli), small_moduli, multipliers=[SHIFT_MULTIPLIER_BOUND, 0])

    def test_masked_components_vary(self, small_moduli: ModuliSet, rng: random.Random) -> None:
        """Test repeated encodings of one value differ but decode alike."""
        encodings = [encode(200, small_moduli, rng) for _ in range(20)]
        assert len({x.components for x in encodings}) > 1
        assert all(decode(x, small_moduli) == 200 for x in encodings)
        assert all(u < m * SHIFT_MULTIPLIER_BOUND for x in encodings for u, m in zip(x.components, (17, 19)))

    def test_out_of_range(self, small_moduli: ModuliSet) -> None:
        """Test values outside [0, M) are rejected."""
        with pytest.raises(OutOfRange):
            encode(323, small_moduli)
        with pytest.raises(OutOfRange):
            encode(-1, small_moduli)

    def test_wrong_moduli(self, small_moduli: ModuliSet) -> None:
        """Test decoding over a different set raises ModuliMismatch."""
        x = encode(5, make_moduli_set([5, 7]))
        with pytest.raises(ModuliMismatch):
            decode(x, small_moduli)

    def test_canonicalize(self, small_moduli: ModuliSet, rng: random.Random) -> None:
        """Test canonicalize strips the mask."""
        assert canonicalize(encode(56, small_moduli, rng), small_moduli).components == (5, 18)

    def test_garner_matches_crt(self, small_moduli: ModuliSet) -> None:
        """Test the two-modulus decode agrees with CRT."""
        x = from_residues([5, 18], small_moduli)
        assert decode_garner(x, small_moduli) == 56

    def test_garner_needs_two_moduli(self) -> None:
        """Test the two-modulus decode refuses three moduli."""
        moduli = make_moduli_set([3, 5, 7])
        with pytest.raises(ModuliMismatch):
            decode_garner(encode(4, moduli), moduli)

    @settings(max_examples=10_000, deadline=None)
    @given(st.integers(0, (1 << 32) - 1), st.randoms(use_true_random=False))
    def test_round_trip_wide(self, v: int, r: random.Random) -> None:
        """Test decode(encode(v)) == v over {65536, 65537} with masking."""
        moduli = make_moduli_set([65536, 65537])
        assert decode(encode(v, moduli, r), moduli) == v

    @given(st.integers(0, 3 * 5 * 7 * 11 - 1))
    def test_crt_and_mixed_radix_agree(self, v: int) -> None:
        """Test both reconstructions over four moduli."""
        moduli = make_moduli_set([3, 5, 7, 11])
        x = encode(v, moduli)
        assert decode(x, moduli) == v
        assert from_mixed_radix(to_mixed_radix(x, moduli)) == v

    @pytest.mark.parametrize("moduli", [(4, 7), (17, 19), (5, 7, 11)])
    def test_round_trip_exhaustive(self, moduli: tuple[int, ...], rng: random.Random) -> None:
        """Test every value of the range under ten random masks each."""
        mset = make_moduli_set(moduli)
        for v in range(mset.dynamic_range):
            for _ in range(10):
                x = encode(v, mset, rng)
                assert decode(x, mset) == v
                assert from_mixed_radix(to_mixed_radix(x, mset)) == v

    def test_reduce_plain(self, small_moduli: ModuliSet) -> None:
        """Test plain reduction gives the unmasked residues."""
        assert reduce_plain(56, small_moduli).components == (5, 18)
        assert reduce_plain(0, small_moduli).components == (0, 0)
        with pytest.raises(OutOfRange):
            reduce_plain(323, small_moduli)


class TestMixedRadix:
    """Test mixed-radix conversion."""

    def test_worked_example(self, small_moduli: ModuliSet) -> None:
        """Test 56 over {17, 19} has digits (5, 3)."""
        digits = to_mixed_radix(encode(56, small_moduli), small_moduli)
        assert digits.digits == (5, 3)
        assert digits.value() == 56

    def test_masking_does_not_change_digits(self, small_moduli: ModuliSet, rng: random.Random) -> None:
        """Test digits come from canonical residues."""
        assert to_mixed_radix(encode(56, small_moduli, rng), small_moduli).digits == (5, 3)


class TestSigned:
    """Test the offset encoding of signed values."""

    def test_range_edges(self, small_moduli: ModuliSet) -> None:
        """Test the smallest and largest signed values round-trip."""
        assert decode_signed(encode_signed(-161, small_moduli), small_moduli) == -161
        assert decode_signed(encode_signed(161, small_moduli), small_moduli) == 161
        assert decode(encode_signed(-161, small_moduli), small_moduli) == 0

    def test_outside_signed_range(self, small_moduli: ModuliSet) -> None:
        """Test values beyond the signed range are rejected."""
        with pytest.raises(OutOfRange):
            encode_signed(-162, small_moduli)
        with pytest.raises(OutOfRange):
            encode_signed(162, small_moduli)


class TestEvents:
    """Test primitives publish their operands and results."""

    def test_encode_publishes(self, small_moduli: ModuliSet) -> None:
        """Test encode and the nested shift both reach a subscriber."""
        seen: list[IntrinsicEvent] = []
        with event_bus.listening(seen.append):
            encode(56, small_moduli)
        ops = [e.op for e in seen if isinstance(e, IntrinsicEvent)]
        assert ops == ["add_random_shift", "encode"]
        assert seen[-1].operands == (56,)
        assert seen[-1].result.components == (5, 18)

    def test_suspended_is_silent(self, small_moduli: ModuliSet) -> None:
        """Test nothing is published while the bus is suspended."""
        seen: list[object] = []
        with event_bus.listening(seen.append):
            with event_bus.suspended():
                encode(56, small_moduli)
        assert seen == []
