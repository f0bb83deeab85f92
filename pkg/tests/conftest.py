import numpy as np
import pytest

from toalab import (CouplingFunction, DensityOfStates, DetectorModel, Dispersion, MomentumGrid,
                    TransitionSystem, gaussian_packet)


@pytest.fixture(scope="session")
def nonrel():
    return Dispersion("nonrelativistic", 1.0)


@pytest.fixture(scope="session")
def relativistic():
    return Dispersion("relativistic", 1.0)


@pytest.fixture(scope="session")
def standard_packet():
    grid = MomentumGrid(1.0, 9.0, 4096)
    return gaussian_packet(grid, 5.0, 0.25)


@pytest.fixture(scope="session")
def coherent_model():
    return DetectorModel(kind="coherent", mu_star=0.1, gap=0.5, delta=0.05, distance=50.0,
                         coupling=CouplingFunction(family="gaussian", amplitude=1.3,
                                                   center=5.0, width=4.0))


@pytest.fixture(scope="session")
def decoherent_model():
    return DetectorModel(kind="decoherent", mu_star=0.5, diffusion=10.0, delta=0.3, distance=50.0,
                         coupling=CouplingFunction(family="constant", amplitude=0.8))


@pytest.fixture(scope="session")
def energy_model():
    return DetectorModel(kind="energy", delta=0.2, distance=50.0,
                         coupling=CouplingFunction(family="constant", amplitude=1.1),
                         density_of_states=DensityOfStates(family="constant", value=0.7))


def two_level_rabi(omega=1.0):
    """H = omega sigma_x, transition |0> -> |1>."""
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    proj = np.diag([0.0, 1.0]).astype(complex)
    rho = np.diag([1.0, 0.0]).astype(complex)
    return TransitionSystem(hamiltonian=omega * sx, projector=proj,
                            outcomes={"click": proj}, rho0=rho)


def two_level_split(eps=0.7, g=0.3):
    """H = eps sigma_z + g sigma_x with the commuting split h0 = eps sigma_z."""
    h0 = eps * np.diag([1.0, -1.0]).astype(complex)
    h_int = g * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    proj = np.diag([0.0, 1.0]).astype(complex)
    rho = np.diag([1.0, 0.0]).astype(complex)
    return TransitionSystem(hamiltonian=h0 + h_int, projector=proj, outcomes={"click": proj},
                            rho0=rho, h0=h0, h_int=h_int)


def dephasing_three_level(g=0.1, detuning=6.0, t2=1.0):
    """One undetected level coupled to a resonant and a detuned detection level,
    with an environment-mimicking Gaussian dephasing of two-time correlators."""
    h0 = np.diag([0.0, 0.0, detuning]).astype(complex)
    h_int = np.zeros((3, 3), dtype=complex)
    h_int[0, 1] = h_int[1, 0] = g
    h_int[0, 2] = h_int[2, 0] = g
    proj = np.diag([0.0, 1.0, 1.0]).astype(complex)
    rho = np.diag([1.0, 0.0, 0.0]).astype(complex)
    return TransitionSystem(hamiltonian=h0 + h_int, projector=proj, outcomes={"hit": proj},
                            rho0=rho, h0=h0, h_int=h_int, dephasing_time=t2)


def random_four_level(seed=7, eps=1e-2):
    """Random hermitian coupling at strength eps on top of a diagonal h0."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h1 = 0.5 * (a + a.conj().T)
    h1 /= np.linalg.norm(h1, 2)
    h0 = np.diag(rng.normal(size=4)).astype(complex)
    proj = np.diag([0.0, 0.0, 1.0, 1.0]).astype(complex)
    rho = np.diag([0.6, 0.4, 0.0, 0.0]).astype(complex)
    outcomes = {"a": np.diag([0.0, 0.0, 1.0, 0.0]).astype(complex),
                "b": np.diag([0.0, 0.0, 0.0, 1.0]).astype(complex)}
    return TransitionSystem(hamiltonian=h0 + eps * h1, projector=proj, outcomes=outcomes,
                            rho0=rho, h0=h0, h_int=eps * h1)
