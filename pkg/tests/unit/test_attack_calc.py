"""Unit tests for the attack cost estimates."""

import math

from pydantic import ValidationError
import pytest

from hoacs.attack_calc import (
    PUBLISHED_MINUTES,
    AttackParams,
    TrojanModel,
    attack_report,
    brute_force_cost,
    trojan_test_time,
)


class TestTrojanTime:
    """Test the exhaustive register testing time."""

    def test_combinational_default(self) -> None:
        """Test 8 registers of 32 bits at 66 cycles and 4 GHz."""
        seconds = trojan_test_time(AttackParams())
        assert seconds == pytest.approx(566.9357, rel=1e-6)
        assert seconds == pytest.approx(566.97, rel=0.01)

    def test_sequential_scales_by_gamma(self) -> None:
        """Test the sequential model multiplies by the trigger states."""
        params = AttackParams(gamma=5)
        assert trojan_test_time(params, "sequential") == pytest.approx(5 * trojan_test_time(params))

    def test_zero_width(self) -> None:
        """Test a 0-bit register has a single value to try."""
        assert trojan_test_time(AttackParams(b=0, n_dr=1, t_exec=4, s_cpu=4)) == 1.0

    def test_unknown_model(self) -> None:
        """Test only the two trojan models exist."""
        with pytest.raises(ValueError):
            trojan_test_time(AttackParams(), "parallel")

    def test_param_validation(self) -> None:
        """Test widths above 64 bits are refused."""
        with pytest.raises(ValidationError):
            AttackParams(b=65)


class TestBruteForce:
    """Test the moduli guessing cost."""

    def test_small(self) -> None:
        """Test m = 323, k = 2."""
        estimate = brute_force_cost(323, 2)
        assert estimate.ops == pytest.approx(6.965e6, rel=1e-3)
        assert not estimate.overflow

    def test_smallest(self) -> None:
        """Test m = 2, k = 1."""
        assert brute_force_cost(2, 1).ops == pytest.approx(0.961, rel=1e-3)

    def test_log_matches(self) -> None:
        """Test the log10 field agrees with the count."""
        estimate = brute_force_cost(65537, 2)
        assert estimate.log10_ops == pytest.approx(math.log10(estimate.ops))

    def test_overflow(self) -> None:
        """Test huge parameters report infinity and keep the logarithm."""
        estimate = brute_force_cost(2**31, 40)
        assert estimate.overflow
        assert math.isinf(estimate.ops)
        assert estimate.log10_ops > 308

    def test_invalid(self) -> None:
        """Test m below 2 is refused."""
        with pytest.raises(ValueError):
            brute_force_cost(1, 2)


class TestReport:
    """Test the combined report."""

    def test_report(self) -> None:
        """Test the report carries both models and the published figures."""
        report = attack_report(AttackParams())
        assert report.sequential_s == pytest.approx(5 * report.combinational_s)
        assert report.published_minutes == PUBLISHED_MINUTES
        assert len(report.notes) == 2
        assert TrojanModel.SEQUENTIAL.value in report.notes[1]
        assert report.model_dump()["params"]["m"] == 65537
