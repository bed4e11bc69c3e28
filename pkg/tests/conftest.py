import json
from pathlib import Path

import numpy as np
import pytest

from kerninv.geometry import Interval, PointSet
from kerninv.kernels import MaternKernel, TrialSpace

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def pins():
    return json.loads((FIXTURES / "oracle_pins.json").read_text())


@pytest.fixture
def unit_interval():
    return Interval()


def interval_space(nodes, m=2.0):
    return TrialSpace(MaternKernel(m, 1), PointSet(np.asarray(nodes, float).reshape(-1, 1), Interval()))
