import sys
from pathlib import Path

import numpy as np
import pytest

# Modules import each other relative to the application directory.
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from base.params import CouplerParams  # noqa: E402


@pytest.fixture
def params_a0() -> CouplerParams:
    return CouplerParams(k=1.0, gamma=0.5, alpha=0)


@pytest.fixture
def params_a1() -> CouplerParams:
    return CouplerParams(k=1.0, gamma=0.5, alpha=1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
