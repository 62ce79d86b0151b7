"""
Shared fixtures: small truncations and deterministic random elements.
"""

from pathlib import Path

import numpy as np
import pytest

from qhm_metric.element import ModelParams, Truncation
from qhm_metric.windowed import random_element


ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
CONFIGS = ROOT / "configs"


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def trunc():
    return Truncation(P=2, Nx=16, Ny=16, Q=4)


@pytest.fixture
def tiny():
    return Truncation(P=1, Nx=8, Ny=8, Q=2)


@pytest.fixture
def element(params, trunc):
    return random_element(7, trunc, params, decay=1.0)


@pytest.fixture
def pair(params, trunc):
    """Two band-1 elements whose star product fits in P = 2."""
    a = random_element(11, trunc, params, decay=1.0, band=1)
    b = random_element(12, trunc, params, decay=1.0, band=1)
    return a, b


@pytest.fixture
def probes():
    """20 points (x, y, p) with x spread over several periods."""
    rng = np.random.default_rng(0)
    xs = rng.uniform(-2.0, 3.0, 20)
    ys = rng.uniform(0.0, 1.0, 20)
    ps = rng.integers(-2, 3, 20)
    return list(zip(xs.tolist(), ys.tolist(), ps.tolist()))


def values(el, points):
    """Element values at a list of (x, y, p) points."""
    return np.array([complex(el.evaluate(x, y, p)) for x, y, p in points])
