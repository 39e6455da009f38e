"""
Pytest configuration and fixtures.
"""

import pytest

from roaddiv.config import CatalogueConfig, RunConfig
from roaddiv.study import StudyContext

from tests.helpers import road_pool


def pytest_configure(config):
    """Configure pytest."""
    config.addinivalue_line("markers", "integration: mark test as integration test")
    config.addinivalue_line("markers", "slow: mark test as slow running")


@pytest.fixture
def small_config():
    """Run config with coarse resampling so catalogues stay fast."""
    return RunConfig(seed=7, catalogue=CatalogueConfig(resample_points=30))


@pytest.fixture
def pool():
    return road_pool(10)


@pytest.fixture
def context(pool, small_config):
    return StudyContext(pool, small_config)
