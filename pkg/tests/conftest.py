import pytest

from vtnsim.curve import secp256k1, toy_curve


@pytest.fixture(scope="session")
def toy():
    return toy_curve()


@pytest.fixture(scope="session")
def k256():
    return secp256k1()


@pytest.fixture(scope="session")
def toy_points(toy):
    """All affine points of the toy curve found by exhaustive field search."""
    pts = [(x, y)
           for x in range(toy.p)
           for y in range(toy.p)
           if (y * y - (x ** 3 + toy.a * x + toy.b)) % toy.p == 0]
    return pts
