"""Shared fixtures: meshes and discretisations reused across test modules."""

import pytest

from rdgdm.hmm import build_hmm, build_p1
from rdgdm.mesh import cartesian_grid, generate_family
from rdgdm.problems import anis_mms, heat_sanity


@pytest.fixture(scope="session")
def cart0():
    return generate_family("cartesian", 0)


@pytest.fixture(scope="session")
def tri0():
    return generate_family("triangular", 0)


@pytest.fixture(scope="session")
def hex0():
    return generate_family("hexagonal", 0)


@pytest.fixture(scope="session")
def hmm_cart0(cart0):
    return build_hmm(cart0)


@pytest.fixture(scope="session")
def hmm_tri0(tri0):
    return build_hmm(tri0)


@pytest.fixture(scope="session")
def hmm_hex0(hex0):
    return build_hmm(hex0)


@pytest.fixture(scope="session")
def p1_tri0(tri0):
    return build_p1(tri0)


@pytest.fixture(scope="session")
def hmm_unit_cell():
    return build_hmm(cartesian_grid(1))


@pytest.fixture(scope="session")
def anis():
    return anis_mms()


@pytest.fixture(scope="session")
def heat():
    return heat_sanity()
