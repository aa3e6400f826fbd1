# ============================================================================
# features/conftest.py - BDD Test Configuration
# ============================================================================
from typing import Generator

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from hoacs.web import app


@pytest.fixture
def live_client() -> Generator[TestClient, None, None]:
    """Client whose requests share one event loop, so a waiting poll sees bench progress"""
    with TestClient(app) as client:
        yield client


@pytest.fixture
def cli_runner() -> CliRunner:
    return CliRunner(env={"HOACS_SEED": None})
