import os

import numpy as np
import pytest


@pytest.fixture(autouse=True, scope="session")
def _test_env():
    os.environ.setdefault("SPARSEBOUNDS_ENVIRONMENT", "test")
    os.environ.setdefault("SPARSEBOUNDS_LOG_LEVEL", "CRITICAL")

    # Clear cached settings and recipes if imported elsewhere.
    try:
        from src.config import get_settings
        from src.core.recipes import get_recipe_manager
        get_settings.cache_clear()
        get_recipe_manager.cache_clear()
    except Exception:
        pass

    yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def identity6():
    from src.core.linalg import DenseMatrix
    return DenseMatrix.identity(6)


@pytest.fixture
def gaussian_12x24(rng):
    from src.core.linalg import DenseMatrix
    return DenseMatrix(rng.standard_normal((12, 24)) / np.sqrt(24))
