# ============================================================================
# features/steps/test_audit_steps.py - Leakage Audit Steps
# ============================================================================
from pytest_bdd import scenarios, when, then, parsers

scenarios("../leakage_audit.feature")


@when(parsers.parse('I audit the key "{key}" in "{mode}" mode'))
def audit_one_key(sync_client, bdd_context, key, mode):
    response = sync_client.post(
        "/audit", data={"key": key, "mode": mode}, headers={"Accept": "application/json"}
    )
    assert response.status_code == 200
    bdd_context["reports"] = response.json()


@when(parsers.parse('I audit the reference keys in "{mode}" mode'))
def audit_reference_keys(sync_client, bdd_context, mode):
    response = sync_client.post(
        "/audit", data={"mode": mode, "seed": "5"}, headers={"Accept": "application/json"}
    )
    assert response.status_code == 200
    bdd_context["reports"] = response.json()


@then(parsers.parse("there should be {count:d} reports"))
def check_report_count(bdd_context, count):
    assert len(bdd_context["reports"]) == count


@then("schedule words should appear in the protected segments")
def check_words_leak(bdd_context):
    for report in bdd_context["reports"]:
        assert sum(report["word_hits"][1]) + sum(report["word_hits"][2]) > 0


@then("no schedule word should appear in the protected segments")
def check_no_words(bdd_context):
    for report in bdd_context["reports"]:
        assert sum(report["word_hits"][1]) == 0
        assert sum(report["word_hits"][2]) == 0
        # any key byte still seen is one another key's run saw without having it
        hits = {v for s in (1, 2) for v in report["hit_values"][s]}
        assert hits <= set(report["false_positives"])
