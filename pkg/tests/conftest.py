from __future__ import annotations

import pytest

from ossdoorway.catalog import default_catalog
from ossdoorway.service import OssDoorwayService
from ossdoorway.simulated import SimulatedHost
from ossdoorway.store import FileProgressStore


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture
def store(tmp_path, catalog):
    return FileProgressStore(tmp_path / "data", catalog)


@pytest.fixture
def host():
    return SimulatedHost()


@pytest.fixture
def service(catalog, store, host):
    return OssDoorwayService(catalog, store, host)


@pytest.fixture
def enrolled(service):
    """An enrolled learner; returns (service, host, repo, user)."""
    repo = service.enroll("alice")
    return service, service.client, repo, "alice"
