# conftest.py
# Shared fixtures for the estimator, transform and CLI tests

import json
from pathlib import Path

import numpy as np
import pytest

from app.models.signal_data import BetaPrior, FbmSpec
from app.services.fbm import generate_fbm
from app.services.posterior import expected_energies
from app.services.signal_io import write_signal

FIXTURES_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    """Seeded generator so random-input tests are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def model_energies():
    """Exact expected energies for H=0.5, sigma^2=1, J=11, levels 4..6."""
    return expected_energies(0.5, 1.0, 4, 6, J=11)


@pytest.fixture
def half_prior():
    """Beta(512, 512): prior mean 0.5 at ESS 1024."""
    return BetaPrior(512.0, 512.0)


@pytest.fixture(scope="session")
def fbm_path():
    """Seeded fBm path, H=0.3, n=2^11."""
    return generate_fbm(FbmSpec(n=2048, hurst=0.3, seed=7))


@pytest.fixture
def fbm_file(tmp_path):
    """Seeded fBm fixture, H=0.5, n=2^9, one value per line."""
    signal = generate_fbm(FbmSpec(n=512, hurst=0.5, seed=11))
    path = tmp_path / "fbm_h05_n512.txt"
    write_signal(path, signal.samples, header=[signal.source])
    return path


@pytest.fixture(scope="session")
def golden_file():
    """Stored fBm path, H=1/3, n=2^9, synthesised by exact Cholesky factorisation."""
    return FIXTURES_DIR / "golden_fbm_512.txt"


@pytest.fixture(scope="session")
def golden_expected():
    """Energies and estimates for golden_file at levels 5..8, prior (85.3248, 170.6752)."""
    return json.loads((FIXTURES_DIR / "golden_estimate.json").read_text())
