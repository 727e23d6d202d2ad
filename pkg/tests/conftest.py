import numpy as np
import pytest

import ringwaves as rw


@pytest.fixture(scope="session")
def pendulum5():
    """Pendulum ring n=5, the workhorse continuation model."""
    return rw.build_model(5, rw.pendulum(1.0), rw.harmonic())


@pytest.fixture(scope="session")
def pendulum6():
    return rw.build_model(6, rw.pendulum(1.0), rw.harmonic())


@pytest.fixture(scope="session")
def fpu6():
    """FPU ring with the exact first-mode resonance."""
    return rw.build_model(6, rw.zero(), rw.fpu(1.0))


@pytest.fixture(scope="session")
def cradle5():
    """Contact-coupled pendulum ring (totally degenerate spectrum)."""
    return rw.build_model(5, rw.pendulum(1.0), rw.hertz())


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
