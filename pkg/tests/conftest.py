import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

from src.models import OperatorParams

settings.register_profile("ci", max_examples=10, deadline=None)
settings.register_profile("heavy", max_examples=200, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))


@pytest.fixture
def params_111():
    """n=1, a=1, p=1: D=3, the smallest critical case"""
    return OperatorParams(n=1, a=1, p=1)


@pytest.fixture
def params_half():
    return OperatorParams(n=2, a=Fraction(3, 2), p=1)


@pytest.fixture
def params_biharmonic():
    """n=3, a=1, p=2: D=5"""
    return OperatorParams(n=3, a=1, p=2)
