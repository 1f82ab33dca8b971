import pytest

from specquiver.quiver import LatticeSpec, make_torus
from specquiver.repcat import random_representation, uniform_network


def haar_torus(d, m, N, seed=0, **kw):
    q = make_torus(LatticeSpec(d, m, **kw))
    return random_representation(q, uniform_network(q, N), seed)


@pytest.fixture
def t25():
    return haar_torus(2, 5, 2, seed=11)
