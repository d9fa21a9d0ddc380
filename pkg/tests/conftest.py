import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models import StateSpaceModel  # noqa: E402


@pytest.fixture
def double_integrator():
    return StateSpaceModel(A=[[0.0, 1.0], [0.0, 0.0]], B=[[0.0], [1.0]], C=[[1.0, 0.0]], D=[[0.0]])


@pytest.fixture
def scalar_decay():
    return StateSpaceModel(A=[[-1.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
