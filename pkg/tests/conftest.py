import numpy as np
import pytest

from pwlab.core import GridSpec, ParticleModel
from pwlab.potentials import Free, Harmonic
from pwlab.schrodinger import evolve, gaussian_packet


@pytest.fixture(scope="session")
def grid1d():
    return GridSpec((512,), (-20.0,), (20.0,))


@pytest.fixture(scope="session")
def unit_mass():
    return ParticleModel((1.0,))


@pytest.fixture(scope="session")
def free_record(grid1d, unit_mass):
    """Free Gaussian, sigma=1, p=0, evolved to t=1 at dt=1e-3."""
    psi0 = gaussian_packet(grid1d, [0.0], [0.0], [1.0])
    return evolve(psi0, Free(), unit_mass, 1.0, 1e-3, 10)


@pytest.fixture(scope="session")
def moving_record(grid1d, unit_mass):
    psi0 = gaussian_packet(grid1d, [-2.0], [1.5], [1.0])
    return evolve(psi0, Free(), unit_mass, 1.0, 1e-3, 10)


@pytest.fixture(scope="session")
def harmonic():
    return Harmonic((1.0,))


def random_state(grid, seed):
    rng = np.random.default_rng(seed)
    x = grid.axis(0)
    amps = sum(rng.normal() * np.exp(-((x - rng.uniform(-3, 3)) ** 2) / 2 + 1j * rng.uniform(-2, 2) * x) for _ in range(3))
    return amps


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
