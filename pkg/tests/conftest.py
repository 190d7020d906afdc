"""Shared fixtures. Models are session-scoped: symbolic compilation dominates test time."""

from __future__ import annotations

import math

import numpy as np
import pytest

from staticlab.kobayashi import find_periodic_warp
from staticlab.models import load_model
from staticlab.statics import StaticModel


@pytest.fixture(scope="session")
def s3() -> StaticModel:
    return load_model("s3")


@pytest.fixture(scope="session")
def cpe_s3() -> StaticModel:
    return load_model("cpe_s3")


@pytest.fixture(scope="session")
def s1xs2() -> StaticModel:
    return load_model("s1xs2")


@pytest.fixture(scope="session")
def flat_t3() -> StaticModel:
    return load_model("flat_t3")


@pytest.fixture(scope="session")
def warped4() -> StaticModel:
    return load_model("warped4")


@pytest.fixture(scope="session")
def warped5() -> StaticModel:
    """Doubly warped n=5 model with a nonzero D tensor."""
    return load_model("warped5")


@pytest.fixture(scope="session")
def periodic_warp():
    warp = find_periodic_warp(3, 6.0, 0.9)
    assert warp is not None
    return warp


@pytest.fixture
def s3_point() -> np.ndarray:
    """A generic point of the unit 3-sphere chart (s, polar, azimuth)."""
    return np.array([1.0, 1.2, 0.7])


@pytest.fixture
def height_level() -> float:
    return math.cos(1.0)
