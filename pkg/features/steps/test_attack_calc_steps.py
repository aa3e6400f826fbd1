# ============================================================================
# features/steps/test_attack_calc_steps.py - Attack Calculator Steps
# ============================================================================
import json

import pytest
from pytest_bdd import scenarios, when, then, parsers

from hoacs.cli import cli

scenarios("../attack_calc.feature")


@when("I run the attack calculator with default parameters")
def run_defaults(cli_runner, bdd_context):
    result = cli_runner.invoke(cli, ["attack-calc"])
    assert result.exit_code == 0
    bdd_context["report"] = json.loads(result.output)


@when(parsers.parse("I run the attack calculator with m {m:d} and k {k:d}"))
def run_with_moduli(cli_runner, bdd_context, m, k):
    result = cli_runner.invoke(cli, ["attack-calc", "--m", str(m), "--k", str(k)])
    assert result.exit_code == 0
    bdd_context["report"] = json.loads(result.output)


@then(parsers.parse("the combinational time should be about {seconds:f} seconds"))
def check_combinational(bdd_context, seconds):
    assert bdd_context["report"]["combinational_s"] == pytest.approx(seconds, rel=1e-6)


@then(parsers.parse("the sequential time should be {gamma:d} times the combinational time"))
def check_sequential(bdd_context, gamma):
    report = bdd_context["report"]
    assert report["sequential_s"] == pytest.approx(gamma * report["combinational_s"])


@then(parsers.parse("the brute-force cost should be about {ops:d} operations"))
def check_brute_force(bdd_context, ops):
    assert bdd_context["report"]["brute_force_ops"] == pytest.approx(ops, rel=1e-3)
