"""Engines cross-checked against each other on random circuits, at the sizes used by the
verification suite but with fewer circuits
"""
import numpy as np
import pytest

from cliffsim import (
    DeviceEmulatorConfig,
    HardwareNoiseProfile,
    PauliObservable,
    SpdEngine,
    StabilizerEngine,
    attach_profile,
    heisenberg_noisy_expectation,
    random_clifford_circuit,
    random_rotation_circuit,
    spd_expectation,
)
from cliffsim.backends.dense import noisy_expectation
from cliffsim.harness import VERIFY_CHECKS
from tests.conftest import ATOL, N_RANDOM_CIRCUITS, dense_expectation, random_label

PROFILE = HardwareNoiseProfile(0.01, 0.02, 0.03, 0.04)


@pytest.mark.parametrize('n', [1, 4, 8])
def test_stabilizer_vs_dense(n):
    rng = np.random.default_rng(n)
    engine = StabilizerEngine()
    for _ in range(N_RANDOM_CIRCUITS):
        c = random_clifford_circuit(n, int(rng.integers(1, 61)), rng)
        o = PauliObservable.from_pauli(random_label(n, rng))
        initial = int(rng.integers(2**n))
        assert engine.expectation(c, o, initial) == pytest.approx(
            dense_expectation(c, o, initial), abs=ATOL
        )


@pytest.mark.parametrize('n', [2, 6, 10])
def test_untruncated_spd_vs_dense(n):
    rng = np.random.default_rng(n)
    for _ in range(N_RANDOM_CIRCUITS):
        c = random_rotation_circuit(n, int(rng.integers(1, 30)), rng)
        terms = [(random_label(n, rng), 1.0), (random_label(n, rng), -0.5)]
        o = PauliObservable.from_paulis(n, terms)
        assert spd_expectation(c, o) == pytest.approx(dense_expectation(c, o), abs=ATOL)


def test_spd_engine_vs_stabilizer_on_clifford_circuits():
    rng = np.random.default_rng(0)
    for _ in range(N_RANDOM_CIRCUITS):
        n = int(rng.integers(1, 7))
        c = random_clifford_circuit(n, 40, rng)
        o = PauliObservable.from_pauli(random_label(n, rng))
        # Clifford circuits never split a path
        assert SpdEngine(m_max=1).expectation(c, o) == pytest.approx(
            StabilizerEngine().expectation(c, o), abs=ATOL
        )


@pytest.mark.parametrize('n', [2, 4])
def test_noisy_heisenberg_vs_density_matrix(n):
    rng = np.random.default_rng(n)
    device = DeviceEmulatorConfig(n_shots=None, trajectories='density')
    for _ in range(N_RANDOM_CIRCUITS // 2):
        c = attach_profile(random_clifford_circuit(n, int(rng.integers(1, 12)), rng), PROFILE)
        o = PauliObservable.from_pauli(random_label(n, rng))
        assert heisenberg_noisy_expectation(c, o) == pytest.approx(
            noisy_expectation(c, o, 0, device), abs=ATOL
        )


@pytest.mark.parametrize(
    'name', ['rotation-decompositions', 'noisy-decompositions', 'two-rotation-fixtures']
)
def test_fast_verify_checks(name):
    passed, detail = VERIFY_CHECKS[name]()
    assert passed, detail
