from fractions import Fraction

import pytest

from trunsep.hn_simulator import build_decomposition_table
from trunsep.state_sets import TruncatedCube

HALF = Fraction(1, 2)


@pytest.fixture(scope="session")
def half_cube():
    return TruncatedCube(HALF)


@pytest.fixture(scope="session")
def half_table():
    table = build_decomposition_table(HALF)
    table.warm()
    return table
