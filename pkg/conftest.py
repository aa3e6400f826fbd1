# ============================================================================
# conftest.py - Pytest Configuration and Fixtures
# ============================================================================
from typing import AsyncGenerator, Generator, Dict, Any
import random

import pytest
import pytest_asyncio
from httpx import AsyncClient, ASGITransport
from fastapi.testclient import TestClient

from hoacs.events import event_bus
from hoacs.rnc_core import ModuliSet, make_moduli_set
from hoacs.web import app, progress_bus


@pytest.fixture
def sync_client() -> TestClient:
    """Synchronous TestClient for simple tests"""
    return TestClient(app)


@pytest_asyncio.fixture
async def async_client() -> AsyncGenerator[AsyncClient, None]:
    """Async client for testing async endpoints"""
    async with AsyncClient(
        transport=ASGITransport(app=app), base_url="http://test"
    ) as client:
        yield client


@pytest_asyncio.fixture
async def reset_progress_bus() -> AsyncGenerator[None, None]:
    """Reset the bench progress bus before each test"""
    progress_bus.subscribers.clear()
    yield
    progress_bus.subscribers.clear()


@pytest.fixture(autouse=True)
def reset_progress_bus_sync(request) -> Generator[None, None, None]:
    """Reset the progress bus for sync tests"""
    if "reset_progress_bus" in request.fixturenames:
        yield
        return
    progress_bus.subscribers.clear()
    yield
    progress_bus.subscribers.clear()


@pytest.fixture(autouse=True)
def no_trace_subscribers() -> Generator[None, None, None]:
    """A test that leaves a tracer subscribed would leak events into the next one"""
    yield
    assert event_bus.subscribers == ()


@pytest.fixture
def rng() -> random.Random:
    """Seeded generator so shifted encodings are reproducible"""
    return random.Random(1234)


@pytest.fixture
def small_moduli() -> ModuliSet:
    """{17, 19}, M = 323"""
    return make_moduli_set([17, 19])


@pytest.fixture
def wide_moduli() -> ModuliSet:
    """{65536, 65537}, M just above 2**32"""
    return make_moduli_set([65536, 65537])


@pytest.fixture
def bdd_context() -> Dict[str, Any]:
    """Shared context for BDD steps"""
    return {}
