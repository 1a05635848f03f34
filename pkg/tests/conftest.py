from fractions import Fraction as F

import pytest

from oaklift import product as pr
from oaklift.lift import Space1D

Q3 = [F(1, 2), F(1, 3), F(2, 3)]


@pytest.fixture(scope="session")
def limit3():
    return pr.build_limit(Space1D.parse("[0,1]"), Q3, 3)


@pytest.fixture(scope="session")
def limit4():
    return pr.build_limit(Space1D.parse("[0,1]"), Q3, 4)
