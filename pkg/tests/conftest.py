"""Fixtures that will be automatically picked up by pytest

Short description:
* Unit tests use small circuits (at most a handful of qubits) and exact device settings, so
  expected values are either closed-form or come from the dense engine.
* Integration tests cross-check engines on random circuits, and run the harness commands at
  reduced scale. Tests marked ``slow`` run the acceptance checks at full sample counts.
"""
import os
from logging import basicConfig, getLogger
from math import pi

import numpy as np
import pytest

from cliffsim import (
    Circuit,
    DeviceEmulatorConfig,
    ParamCircuit,
    PauliObservable,
    build_trotter_ising,
    compile_native,
    fig2_circuit,
    run_statevector,
    state_expectation,
)

# Allow running longer randomized tests with an environment variable
STRESS_MULTIPLIER = int(os.getenv('CLIFFSIM_STRESS_MULTIPLIER', '1'))
N_RANDOM_CIRCUITS = 20 * STRESS_MULTIPLIER
N_SAMPLES = 20_000 * STRESS_MULTIPLIER

ATOL = 1e-10
THETA, PHI = 0.3, 0.7
GAMMA_1, GAMMA_2 = 0.05, 0.08
# Angles that are not multiples of pi/2, plus a few that are
ANGLES = [0.0, 0.1, pi / 4, 1.0, pi / 2, 2.2, pi, -0.7, 3 * pi / 2]

# Configure logging to show log output when tests fail (or with pytest -s)
basicConfig(level='INFO')
# getLogger('cliffsim').setLevel('DEBUG')
logger = getLogger(__name__)


def dense_expectation(c: Circuit, o: PauliObservable, initial=0) -> float:
    """Noiseless reference value from the statevector simulator"""
    return state_expectation(run_statevector(c.without_noise(), initial), o)


def random_label(n: int, rng: np.random.Generator) -> str:
    """A random non-identity Pauli label"""
    while True:
        label = ''.join(rng.choice(list('IXYZ'), size=n))
        if set(label) != {'I'}:
            return label


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def exact_device() -> DeviceEmulatorConfig:
    return DeviceEmulatorConfig.exact()


@pytest.fixture
def x_plus_z() -> PauliObservable:
    """``X + Z`` on one qubit"""
    return PauliObservable.from_paulis(1, [('X', 1.0), ('Z', 1.0)])


@pytest.fixture
def two_rotation_circuit() -> ParamCircuit:
    """Noisy single-qubit ``R_X(theta)`` then ``R_Z(phi)``"""
    return fig2_circuit(THETA, PHI, GAMMA_1, GAMMA_2)


@pytest.fixture
def small_trotter() -> ParamCircuit:
    """3-qubit, 1-step Trotter circuit compiled to native gates"""
    return compile_native(build_trotter_ising(3, 1))
