import math

import numpy as np
import pytest

from respondyn import CircleMap, LogisticMap, TentMap

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="session")
def circle_test_maps():
    """Five expanding circle maps used across operator tests."""
    return [
        CircleMap(degree=2),
        CircleMap(degree=2, sin_amps=(0.05,)),
        CircleMap(degree=2, sin_amps=(0.02, 0.01), cos_amps=(0.015,)),
        CircleMap(degree=3, cos_amps=(0.04,)),
        CircleMap(degree=2, sin_amps=(-0.03,), cos_amps=(0.005, 0.01)),
    ]


@pytest.fixture(scope="session")
def markov_tent():
    """Tent map whose critical orbit reaches a repelling fixed point."""
    return TentMap(a=SQRT2 - 1.0)


@pytest.fixture(scope="session")
def full_tent():
    return TentMap(a=1.0)


@pytest.fixture(scope="session")
def top_logistic():
    return LogisticMap(t=4.0)


def markov_tent_exact_density():
    """Hand-solved piecewise-constant invariant density at a = sqrt(2)-1.

    Plateau (3+2*sqrt 2)/4 on [c2, c3), sqrt(2) times that on [c3, c1]."""
    a = SQRT2 - 1.0
    lower = (3.0 + 2.0 * SQRT2) / 4.0
    upper = SQRT2 * lower
    c1, c3 = a, 3.0 - 2.0 * SQRT2
    c2 = -c3

    def density(xs):
        xs = np.asarray(xs)
        out = np.where((xs >= c2) & (xs < c3), lower, 0.0)
        return np.where((xs >= c3) & (xs <= c1), upper, out)

    return density, (c1, c2, c3), (lower, upper)
