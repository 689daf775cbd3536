import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
DATA_DIR = TESTS_DIR / "data"

sys.path.insert(0, str(TESTS_DIR))

from dlama.client import EndpointConfig, HarvestClient  # noqa: E402


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def warm_cache_dir() -> Path:
    return DATA_DIR / "warm_cache"


@pytest.fixture()
def offline_client(warm_cache_dir) -> HarvestClient:
    """Client that can only replay the bundled warm cache."""
    return HarvestClient(
        EndpointConfig(cache_dir=warm_cache_dir, offline=True, min_request_interval=0.0)
    )


@pytest.fixture()
def fake_client_factory(tmp_path):
    """Build a client talking to a FakeWikidataTransport over given facts."""
    from synthetic_wikidata import FakeWikidataTransport

    def build(facts, **cfg_overrides):
        cfg = EndpointConfig(
            cache_dir=tmp_path / "cache", min_request_interval=0.0, **cfg_overrides
        )
        transport = FakeWikidataTransport(facts)
        return HarvestClient(cfg, transport=transport), transport

    return build
