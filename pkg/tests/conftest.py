import numpy as np
import pytest

from nsfk.symbols import equilibrium_coefficients
from nsfk.thermo import Domain, State, ideal_gas_eos

GAMMA = 5.0 / 3.0


@pytest.fixture(scope="session")
def ref_eos():
    """Reference closure: ideal gas R=1, gamma=5/3, unit kappa/mu/alpha."""
    return ideal_gas_eos(1.0, GAMMA, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def nsf_eos():
    """Capillarity-free sub-case (kappa0 = 0)."""
    return ideal_gas_eos(1.0, GAMMA, 0.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def ref_equilibrium():
    return State(1.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def ref_coeffs(ref_eos, ref_equilibrium):
    return equilibrium_coefficients(ref_eos, ref_equilibrium)


@pytest.fixture(scope="session")
def nsf_coeffs(nsf_eos, ref_equilibrium):
    return equilibrium_coefficients(nsf_eos, ref_equilibrium)


@pytest.fixture(scope="session")
def domain():
    return Domain(rho_min=0.1, theta_min=0.1, rho_max=3.0, theta_max=3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
