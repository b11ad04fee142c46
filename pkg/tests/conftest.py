# tests/conftest.py
import pytest

from app.config import get_settings
from app.core.topology import build_torus_grid
from app.utils.cache_system import estimate_cache, rank_memo


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="executa testes marcados como slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="use --runslow para executar")
    for item in items:
        if "slow" in item.keywords or "very_slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def root():
    """Código tórico 3x3 (18 qubits)"""
    return build_torus_grid(3, 3)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    # Cada teste lê as variáveis de ambiente de novo
    monkeypatch.setenv("QECFORGE_ESTIMATE_CACHE", "false")
    get_settings.cache_clear()
    estimate_cache.clear()
    rank_memo.clear()
    yield
    get_settings.cache_clear()
