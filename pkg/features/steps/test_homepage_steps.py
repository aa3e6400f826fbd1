# ============================================================================
# features/steps/test_homepage_steps.py - Homepage Steps
# ============================================================================
from pytest_bdd import scenarios, when, then, parsers
from bs4 import BeautifulSoup

scenarios('../homepage.feature')

@when('I visit the home page')
def visit_home(sync_client, bdd_context):
    bdd_context['response'] = sync_client.get("/")

@then('the page should have the correct title')
def check_title(bdd_context):
    assert bdd_context['response'].status_code == 200
    soup = BeautifulSoup(bdd_context['response'].text, 'html.parser')
    title = soup.find('title')
    assert title is not None
    assert "Residue Coding Workbench" in title.text

@then('every trace mode should be offered')
def check_modes(bdd_context):
    soup = BeautifulSoup(bdd_context['response'].text, 'html.parser')
    offered = {option['value'] for option in soup.select('select[name="mode"] option')}
    assert offered == {"baseline", "protected-tree", "protected-grid"}

@when(parsers.parse('I encode {value:d} over the moduli "{moduli}" without a shift'))
def encode_plain(sync_client, bdd_context, value, moduli):
    bdd_context['response'] = sync_client.post("/encode", data={"value": value, "moduli": moduli})

@when(parsers.parse('I encode {value:d} over the moduli "{moduli}" with seed {seed:d}'))
def encode_masked(sync_client, bdd_context, value, moduli, seed):
    response = sync_client.post(
        "/encode",
        data={"value": value, "moduli": moduli, "shift": "true", "seed": seed},
        headers={"Accept": "application/json"},
    )
    bdd_context['components'] = ",".join(str(c) for c in response.json()["components"])

@when(parsers.parse('I decode the returned components over "{moduli}"'))
def decode_components(sync_client, bdd_context, moduli):
    bdd_context['response'] = sync_client.post(
        "/decode", data={"components": bdd_context['components'], "moduli": moduli}
    )

@then(parsers.parse('I should see the components "{components}"'))
def check_components(bdd_context, components):
    soup = BeautifulSoup(bdd_context['response'].text, 'html.parser')
    assert soup.find(class_="components").text.strip() == components

@then(parsers.parse('I should see the decoded value {value:d}'))
def check_decoded(bdd_context, value):
    soup = BeautifulSoup(bdd_context['response'].text, 'html.parser')
    assert soup.find(class_="value").text.strip() == str(value)
