import numpy as np
import pytest

from config import SystemConfig
from channel_engine.dictionaries import build_dictionaries


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long Monte-Carlo checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def full_cfg():
    """Scenario of the simulation section: N_R=32, N_B=4, K=4, M=28, M_b=8, J=30"""
    return SystemConfig(
        n_bs_antennas=4, n_ris_elements=32, n_users=4, grid_bs=16, grid_ris=64,
        paths_rb=2, paths_ru=2, codeword_len=28, bits_per_block=8, n_blocks=30, snr_db=10.0,
    ).validate()


@pytest.fixture
def small_cfg():
    """Scaled-down scenario that keeps every structural property"""
    return SystemConfig(
        n_bs_antennas=2, n_ris_elements=8, n_users=2, grid_bs=4, grid_ris=16,
        paths_rb=1, paths_ru=2, codeword_len=12, bits_per_block=5, n_blocks=12, snr_db=20.0,
    ).validate()


@pytest.fixture
def full_dict(full_cfg):
    return build_dictionaries(full_cfg)


@pytest.fixture
def small_dict(small_cfg):
    return build_dictionaries(small_cfg)


@pytest.fixture(autouse=True)
def _isolated_outputs(tmp_path, monkeypatch):
    """Keep the trial database and result files inside the test's tmp dir"""
    from database import models

    monkeypatch.setattr(models.Config, "DATABASE_URL", f"sqlite:///{tmp_path / 'trials.db'}")
    monkeypatch.setattr(models, "engine", None)
    monkeypatch.setattr(models, "SessionLocal", None)
    yield
