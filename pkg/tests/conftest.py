import math

import numpy as np
import pytest

from psustat.moebius import MoebiusMap

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def g_sqrt2():
    return MoebiusMap(SQRT2, 1.0)


def power(g, n):
    h = MoebiusMap.identity()
    for _ in range(n):
        h = h @ g
    return h


def random_disk_point(rng, rmax=0.95):
    return rmax * math.sqrt(rng.uniform()) * complex(math.cos(t := 2 * math.pi * rng.uniform()), math.sin(t))
