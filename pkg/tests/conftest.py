import numpy as np
import pytest

from weakdsf import (
    BoseHubbardParams,
    LatticeSpec,
    Propagator,
    build_basis,
    build_hamiltonian,
    ground_state,
)


def make_system(sites, particles, n_max, U=2.0, J=1.0):
    basis = build_basis(LatticeSpec(sites, particles, n_max))
    h = build_hamiltonian(basis, BoseHubbardParams(J=J, U=U))
    psi0, energy = ground_state(h)
    return basis, h, psi0, energy


@pytest.fixture(scope="session")
def dimer():
    """Two sites, one particle: the hopping ground state (|10> + |01>)/sqrt(2)."""
    basis, h, psi0, e = make_system(2, 1, 1, U=0.0)
    return basis, h, psi0, Propagator(h)


@pytest.fixture(scope="session")
def chain4():
    basis, h, psi0, e = make_system(4, 4, 3)
    return basis, h, psi0, Propagator(h)


@pytest.fixture(scope="session")
def chain6():
    basis, h, psi0, e = make_system(6, 6, 3)
    return basis, h, psi0, Propagator(h)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def ensemble6(chain6):
    """The L = 6 reference ensemble: gamma 0.05, 2000 trajectories, delays 0..3 step 0.05."""
    from weakdsf import ProtocolConfig, run_ensemble
    from weakdsf.analysis import Ensemble

    _, _, psi0, prop = chain6
    cfg = ProtocolConfig(gamma=0.05, trajectories=2000, second_noise="include", seed=0)
    return Ensemble.from_records(run_ensemble(psi0, cfg, prop))


@pytest.fixture(scope="session")
def oracle6(chain6):
    from weakdsf.analysis import Oracle
    from weakdsf.trajectory import time_grid

    _, _, psi0, prop = chain6
    return Oracle(prop, psi0, time_grid(3.0, 0.05))
