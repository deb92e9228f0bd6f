"""
Pytest configuration and shared fixtures for the smooth copula bootstrap test suite
"""
import numpy as np
import pytest
from dotenv import load_dotenv

from config.settings import get_settings
from estimators.bandwidth_selection import study_model
from estimators.copula_models import sample_copula
from models.schemas import CopulaSpec
from utils.rng import derive_stream

# Load environment variables
load_dotenv()

TEST_SEED = 20240101


@pytest.fixture(scope="session")
def settings():
    """Settings as resolved from the environment"""
    return get_settings()


@pytest.fixture
def stream():
    """Factory of seeded random streams keyed by integers"""
    def make(*keys):
        return derive_stream(TEST_SEED, *keys)
    return make


@pytest.fixture(scope="session")
def normal_oracle():
    """Bivariate normal of the cross-validation study"""
    return study_model()


@pytest.fixture
def clayton_sample():
    """Clayton(2) sample of size 200"""
    spec = CopulaSpec.parse("clayton:2")
    return sample_copula(spec, 200, derive_stream(TEST_SEED, 99))


@pytest.fixture
def small_normal_data():
    """Correlated bivariate normal sample of size 60"""
    rng = derive_stream(TEST_SEED, 7)
    z = rng.standard_normal((60, 2))
    return np.column_stack([z[:, 0], 0.6 * z[:, 0] + 0.8 * z[:, 1]])
