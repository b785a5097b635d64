import math

import numpy as np
import pytest
from scipy.special import comb

from phasethermo.hilbert import SpinBasis, build_operators
from phasethermo.params import PhysicalParams
from phasethermo.phasespace import build_sphere_grid


def binomial_coherent_state(basis, theta, phi):
    """Closed form <j,m|theta,phi> = sqrt(C(2j, j+m)) cos^(j+m) sin^(j-m) e^(-i m phi)."""
    j = basis.j
    m = basis.m_values
    k = (j + m).astype(int)
    amp = np.sqrt(comb(int(2 * j), k)) * np.cos(theta / 2) ** (j + m) * np.sin(theta / 2) ** (j - m)
    return amp * np.exp(-1j * m * phi)


def random_density(n, rng, rank=None):
    rank = n if rank is None else rank
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_pure(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def commutator(a, b):
    return a @ b - b @ a


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def basis25():
    return SpinBasis(25)


@pytest.fixture(scope="session")
def ops25(basis25, params):
    return build_operators(basis25, params)


@pytest.fixture(scope="session")
def grid25(basis25):
    return build_sphere_grid(basis25)


@pytest.fixture(scope="session")
def basis5():
    return SpinBasis(5)


@pytest.fixture(scope="session")
def grid5(basis5):
    return build_sphere_grid(basis5)


def north_pole(basis):
    v = np.zeros(basis.dimension, dtype=complex)
    v[-1] = 1.0
    return v


def lieb(basis):
    return 2 * basis.j / (2 * basis.j + 1)


def log_n(basis):
    return math.log(basis.dimension)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
