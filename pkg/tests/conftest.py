"""Shared fixtures: reference operators reused across test modules."""

import numpy as np
import pytest

from kimura.geometry import Point
from kimura.operator import model1d, product_operator, wright_fisher


@pytest.fixture(scope="session")
def wf():
    """Two-allele genetic-drift operator: both endpoints tangent."""
    return wright_fisher(1, np.array([0.0, 0.0]))


@pytest.fixture(scope="session")
def bessel_like():
    """1D model operator x u'' with the single tangent face {x = 0}."""
    return model1d(0.0)


@pytest.fixture(scope="session")
def tangent_product():
    """2D tangent-tangent product operator on a radius-8 box chart."""
    return product_operator(model1d(0.0, radius=8.0), model1d(0.0, radius=8.0))


@pytest.fixture
def p03():
    return Point([0.3])
