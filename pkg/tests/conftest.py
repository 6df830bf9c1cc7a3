import numpy as np
import pytest

from phlab.dynamics import (DiffeoSequence, PerturbationSpec,
                            PerturbationTerm, standard_cocycle)
from phlab.ledger import derive_ledger
from phlab.spectral import certificate_from_cocycle

STANDARD_TERMS = [
    PerturbationTerm(4e-4, (1, 1, 0), 0),
    PerturbationTerm(1e-3, (0, 1, 1), 1),
    PerturbationTerm(6e-4, (1, 1, 0), 1),
    PerturbationTerm(8e-4, (1, 0, 1), 2),
    PerturbationTerm(5e-4, (0, 2, 0), 1),
]

# base point on the invariant center axis: its orbit stays inside the
# perturbation support, so approximation gaps decay at the proven rate
# for the whole depth window
STANDARD_BASE = np.array([0.0, 0.22, 0.0])


@pytest.fixture(scope="session")
def cocycle():
    return standard_cocycle()


@pytest.fixture(scope="session")
def certificate(cocycle):
    return certificate_from_cocycle(cocycle, slack=1e-6, mu=2.0)


@pytest.fixture(scope="session")
def ledger(certificate):
    return derive_ledger(certificate, beta=0.8)


@pytest.fixture(scope="session")
def linear_seq(cocycle):
    return DiffeoSequence(cocycle, PerturbationSpec([], 3), eps_prime=0.01,
                          grid_count=2000)


@pytest.fixture(scope="session")
def perturbed_seq(cocycle):
    return DiffeoSequence(cocycle, PerturbationSpec(list(STANDARD_TERMS), 3),
                          eps_prime=0.01, grid_count=4000)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
