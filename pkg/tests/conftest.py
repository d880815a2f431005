import random

import pytest

from ddrlift.mesh import MeshFamily, build_family


@pytest.fixture(scope="session")
def tri0():
    return build_family(MeshFamily("triangular", 0))


@pytest.fixture(scope="session")
def tri1():
    return build_family(MeshFamily("triangular", 1))


@pytest.fixture(scope="session")
def cart0():
    return build_family(MeshFamily("cartesian-polygonal", 0))


@pytest.fixture(scope="session")
def cart1():
    return build_family(MeshFamily("cartesian-polygonal", 1))


@pytest.fixture(scope="session")
def hexa0():
    return build_family(MeshFamily("hexagonal-dominant", 0))


@pytest.fixture(scope="session")
def kuhn0():
    return build_family(MeshFamily("triangular", 0, n=3))


@pytest.fixture()
def rng():
    return random.Random(20240811)
