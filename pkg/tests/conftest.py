import numpy as np
import pytest

from capbraid import families as fam
from capbraid.checks import TORUS_SINSIN, TORUS_SINSUM, sphere_height
from capbraid.dynamics import FlowConfig, search_periodic_orbits
from capbraid.geometry import SurfaceModel
from capbraid.hamparse import make_hamiltonian

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus():
    return SurfaceModel.torus(1.0)


@pytest.fixture(scope="session")
def sphere():
    return SurfaceModel.sphere(1.0)


@pytest.fixture(scope="session")
def H_sinsin(torus):
    return make_hamiltonian(torus, TORUS_SINSIN)


@pytest.fixture(scope="session")
def H_sinsum(torus):
    return make_hamiltonian(torus, TORUS_SINSUM)


@pytest.fixture(scope="session")
def H_height(sphere):
    return make_hamiltonian(sphere, sphere_height())


@pytest.fixture(scope="session")
def sinsin_orbits(torus, H_sinsin):
    return search_periodic_orbits(torus, H_sinsin, FlowConfig()).orbits


@pytest.fixture(scope="session")
def height_orbits(sphere, H_height):
    return search_periodic_orbits(sphere, H_height, FlowConfig()).orbits


@pytest.fixture(scope="session")
def sinsin_families(torus, H_sinsin, sinsin_orbits):
    return {k: fam.enumerate_families(torus, H_sinsin, sinsin_orbits, k) for k in fam.KINDS}


@pytest.fixture(scope="session")
def height_families(sphere, H_height, height_orbits):
    return {k: fam.enumerate_families(sphere, H_height, height_orbits, k, window=1) for k in fam.KINDS}


def orbit_at(orbits, point, tol=1e-6):
    """The orbit whose basepoint is at ``point`` (lattice-reduced on the torus)."""
    for o in orbits:
        d = np.asarray(o.basepoint()) - np.asarray(point, dtype=float)
        if d.shape[-1] == 2:
            d -= np.round(d)
        if np.linalg.norm(d) < tol:
            return o
    raise LookupError(f"no orbit at {point}")
