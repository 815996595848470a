import math

import pytest

from pairsource.crystal_optics import bbo
from pairsource.phasematch import PumpConfig

DEG = math.pi / 180


@pytest.fixture(scope="session")
def crystal():
    return bbo()


@pytest.fixture(scope="session")
def pump():
    return PumpConfig.reference()
