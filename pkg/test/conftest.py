"""
Pytest configuration and fixtures for testing.
"""
import os
from pathlib import Path

import numpy as np
import pytest

from mtsp_cmsa.config.app_config import AppConfig
from mtsp_cmsa.models.model_instance import Instance
from mtsp_cmsa.services.instance_service import InstanceService

@pytest.fixture
def unit_cross() -> Instance:
    """
    Depot at the origin with four cities on the unit axes.

    The four cities alone form a diamond of perimeter 4*sqrt(2); the best
    single tour from the depot is 2 + 3*sqrt(2).
    """
    return Instance.from_coords(
        [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)],
        name="unit_cross",
    )


@pytest.fixture
def line_instance() -> Instance:
    """Cities on the positive x axis at 1, 2, 3, 4."""
    return Instance.from_coords(
        [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)],
        name="line",
    )


@pytest.fixture
def random_instance_factory():
    """Build random unit-disk instances by size and seed."""
    def factory(n_cities: int, seed: int) -> Instance:
        return InstanceService.generate_random(n_cities, seed)
    return factory


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def fast_config() -> AppConfig:
    """Defaults with a short subsolver cap for quick engine runs."""
    return AppConfig(subsolver_time_cap_seconds=1.0)


@pytest.fixture
def tsplib_dir() -> Path:
    """TSPLIB directory from $TSPLIB_DIR, skipping the test when absent."""
    value = os.getenv("TSPLIB_DIR")
    if not value or not Path(value).is_dir():
        pytest.skip("TSPLIB_DIR is not set")
    return Path(value)
