"""
Pytest fixtures for GP-Localize tests.
"""

import numpy as np
import pytest

from src.config import get_settings
from src.kernel.gp_core import Dataset, Hyperparams
from src.kernel.sparse_gp import SupportSet
from src.schemas.experiment import ExperimentConfig


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run acceptance-scale tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _fresh_settings():
    """Settings are cached per process; tests that patch env vars need a clean cache."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def hyperparams() -> Hyperparams:
    return Hyperparams.isotropic(signal_var=1.5, length_scale=2.0, noise_var=0.05, prior_mean=0.3)


@pytest.fixture
def noiseless_hyperparams() -> Hyperparams:
    return Hyperparams.isotropic(signal_var=1.0, length_scale=1.0)


@pytest.fixture
def support() -> SupportSet:
    xs, ys = np.meshgrid(np.linspace(0.0, 8.0, 4), np.linspace(0.0, 8.0, 3))
    return SupportSet(np.column_stack([xs.ravel(), ys.ravel()]))


@pytest.fixture
def scattered(rng) -> Dataset:
    """25 distinct random observations over [0, 8]^2."""
    locations = rng.uniform(0.0, 8.0, size=(25, 2))
    values = np.sin(locations[:, 0]) + 0.5 * np.cos(locations[:, 1])
    return Dataset(locations, values)


@pytest.fixture
def small_config() -> ExperimentConfig:
    """A configuration that runs every method in well under a second per seed."""
    return ExperimentConfig(
        tau=3,
        support_size=8,
        particle_count=30,
        sample_path_count=6,
        steps=12,
        rows=8,
        cols=8,
        lane_spacing=3.0,
        length_scale=[2.0],
        noise_var=[0.01],
        seeds=[0, 1],
        truncate_size=4,
        even_size=5,
    )
