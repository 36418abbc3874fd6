"""
Shared fixtures

Run tests with:
    pytest
    pytest -m "not slow"
"""
import numpy as np
import pytest

from fqamfbmc.fbmc_engine import FbmcConfig
from fqamfbmc.models import PrototypeFilter
from fqamfbmc.prototype_filter import phydyas
from fqamfbmc.schemas import ExperimentConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def phydyas16():
    return phydyas(16, 4)


@pytest.fixture
def phydyas100():
    return phydyas(100, 4)


@pytest.fixture
def bank16(phydyas16):
    return FbmcConfig.single(phydyas16)


@pytest.fixture
def bank100(phydyas100):
    return FbmcConfig.single(phydyas100)


@pytest.fixture
def make_filter(rng):
    """Random positive unit-energy filter of any (M, L)"""
    def build(num_subcarriers, overlap, label="random"):
        coeffs = rng.uniform(0.1, 1.0, num_subcarriers * overlap)
        coeffs /= np.sqrt(np.sum(coeffs ** 2))
        return PrototypeFilter(coeffs=coeffs, overlap=overlap, num_subcarriers=num_subcarriers, label=label)
    return build


@pytest.fixture
def small_experiment():
    """16 subcarriers, (4,4), both ASK schemes, a single noiseless SNR point"""
    return ExperimentConfig.model_validate({
        "waveform": {"m_total": 16, "overlap": 4},
        "modulation": {"mf": 4, "mq": 4, "schemes": ["scheme1", "scheme2"]},
        "channel": {"seed": 7},
        "sweep": {
            "snr_db": [200.0],
            "min_bits": 2000,
            "max_bits": 4000,
            "target_errors": 10,
            "symbols_per_frame": 8,
            "trials_per_batch": 2,
        },
        "psd": {"segment_length": 256, "num_symbols": 100},
        "papr": {"num_symbols": 1000, "symbols_per_frame": 50, "min_probability": 1e-2},
        "rate": {"groups": 32, "num_symbols": 2000},
    })
