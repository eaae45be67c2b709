from math import pi

import numpy as np
import pytest

from cliffsim import (
    Circuit,
    CliffordGate,
    DenseEngine,
    DeviceEmulatorConfig,
    HardwareNoiseProfile,
    HeisenbergBatch,
    NonCliffordGateError,
    PauliObservable,
    PauliRotation,
    PauliString,
    StabilizerEngine,
    StabilizerTableau,
    apply_insertion_pattern,
    attach_profile,
    heisenberg_noisy_expectation,
    init_backend,
    random_clifford_circuit,
    sample_patterns,
    substitute_configuration,
)
from cliffsim.backends.dense import noisy_expectation
from cliffsim.backends.stabilizer import config_array, pattern_array
from tests.conftest import ATOL, N_RANDOM_CIRCUITS, dense_expectation, random_label


def test_expectation__matches_dense(rng):
    engine = StabilizerEngine()
    for _ in range(N_RANDOM_CIRCUITS):
        n = int(rng.integers(1, 6))
        c = random_clifford_circuit(n, int(rng.integers(1, 30)), rng)
        o = PauliObservable.from_pauli(random_label(n, rng))
        initial = int(rng.integers(2**n))
        assert engine.expectation(c, o, initial) == pytest.approx(
            dense_expectation(c, o, initial), abs=ATOL
        )


def test_tableau__matches_dense(rng):
    for _ in range(N_RANDOM_CIRCUITS):
        n = int(rng.integers(1, 5))
        c = random_clifford_circuit(n, int(rng.integers(1, 25)), rng)
        tableau = StabilizerEngine().simulate(c)
        q = PauliString.from_label(random_label(n, rng))
        o = PauliObservable.from_pauli(q)
        assert tableau.measure_pauli(q) == pytest.approx(dense_expectation(c, o), abs=ATOL)


def test_tableau__bell_state():
    c = Circuit(2, [CliffordGate('H', [0]), CliffordGate('CNOT', [0, 1])])
    tableau = StabilizerTableau(2).apply_circuit(c)
    assert tableau.measure_pauli(PauliString.from_label('XX')) == 1
    assert tableau.measure_pauli(PauliString.from_label('YY')) == -1
    assert tableau.measure_pauli(PauliString.from_label('ZZ')) == 1
    assert tableau.measure_pauli(PauliString.from_label('ZI')) == 0
    assert sorted(str(tableau).split()) == ['+XX', '+ZZ']


def test_tableau__copy_is_independent():
    tableau = StabilizerTableau(1)
    copy = tableau.copy().apply_gate(CliffordGate('X', [0]))
    assert tableau.measure_pauli(PauliString.from_label('Z')) == 1
    assert copy.measure_pauli(PauliString.from_label('Z')) == -1


@pytest.mark.parametrize('initial, expected', [('00', 1), ('01', -1), ('10', -1), (3, 1)])
def test_expectation__initial_state(initial, expected):
    c = Circuit(2, [CliffordGate('S', [0])])
    o = PauliObservable.from_pauli('ZZ')
    assert StabilizerEngine().expectation(c, o, initial) == expected


@pytest.mark.parametrize('initial', ['0', '012', 4, -1])
def test_expectation__invalid_initial_state(initial):
    c = Circuit(2, [CliffordGate('H', [0])])
    with pytest.raises(ValueError):
        StabilizerEngine().expectation(c, PauliObservable.from_pauli('ZZ'), initial)


def test_expectation__non_clifford():
    c = Circuit(1, [PauliRotation(PauliString.from_label('X'), 0.3)])
    o = PauliObservable.from_pauli('Z')
    with pytest.raises(NonCliffordGateError):
        StabilizerEngine().expectation(c, o)
    with pytest.raises(NonCliffordGateError):
        StabilizerTableau(1).apply_circuit(c)


def test_expectation__wide_circuit():
    """Beyond 64 qubits, terms are propagated one at a time on Python integers"""
    c = Circuit(70, [CliffordGate('X', [69]), CliffordGate('CNOT', [69, 0])])
    o = PauliObservable.from_paulis(
        70,
        [
            (PauliString.from_sparse(70, {69: 'Z'}), 1.0),
            (PauliString.from_sparse(70, {0: 'Z'}), 0.5),
        ],
    )
    assert StabilizerEngine().expectation(c, o) == pytest.approx(-1.5)


def test_heisenberg_noisy__matches_density_matrix(rng):
    device = DeviceEmulatorConfig(n_shots=None, trajectories='density')
    profile = HardwareNoiseProfile(0.01, 0.02, 0.03, 0.04)
    for _ in range(N_RANDOM_CIRCUITS):
        n = int(rng.integers(2, 4))
        c = attach_profile(random_clifford_circuit(n, int(rng.integers(1, 15)), rng), profile)
        o = PauliObservable.from_pauli(random_label(n, rng))
        assert heisenberg_noisy_expectation(c, o) == pytest.approx(
            noisy_expectation(c, o, 0, device), abs=ATOL
        )


def test_batch__configurations(small_trotter, rng):
    o = PauliObservable.magnetization(3)
    ks = rng.integers(0, 4, size=(16, small_trotter.n_layers))
    batch = HeisenbergBatch(small_trotter.bind())
    values = batch.expectations(o, ks=config_array(ks), noisy=False)
    engine = StabilizerEngine()
    expected = [engine.expectation(substitute_configuration(small_trotter, k), o) for k in ks]
    assert np.allclose(values, expected, atol=ATOL)


def test_batch__insertions(small_trotter):
    o = PauliObservable.magnetization(3)
    c = small_trotter.with_angles(np.full(small_trotter.n_layers, pi / 2))
    patterns = sample_patterns(c.n_layers, c.n_qubits, 8, seed=1)
    batch = HeisenbergBatch(apply_insertion_pattern(c, patterns[0]).bind())
    values = batch.expectations(o, insertions=pattern_array(patterns), noisy=False)
    engine = StabilizerEngine()
    expected = [engine.expectation(apply_insertion_pattern(c, p).bind(), o) for p in patterns]
    assert np.allclose(values, expected, atol=ATOL)


def test_batch__term_values(small_trotter):
    o = PauliObservable.from_paulis(3, [('ZII', 2.0), ('IZZ', -1.0)])
    ks = np.zeros((2, small_trotter.n_layers), dtype=np.int8)
    values, coeffs = HeisenbergBatch(small_trotter.bind()).term_values(o, ks=ks)
    assert values.shape == (2, 2)
    assert sorted(coeffs) == [-1.0, 2.0]
    assert np.allclose(values, 1.0)


def test_batch__invalid_shapes(small_trotter):
    batch = HeisenbergBatch(small_trotter.bind())
    o = PauliObservable.magnetization(3)
    with pytest.raises(ValueError):
        batch.expectations(o, ks=np.zeros((2, 3), dtype=np.int8))
    with pytest.raises(ValueError):
        batch.expectations(o, insertions=np.zeros((2, 3, 2), dtype=np.uint64))
    with pytest.raises(ValueError):
        HeisenbergBatch(Circuit(65, [CliffordGate('H', [0])]))


def test_init_backend():
    assert isinstance(init_backend(), StabilizerEngine)
    engine = init_backend(DenseEngine, max_qubits=4, m_max=2)
    assert isinstance(engine, DenseEngine) and engine.max_qubits == 4
    assert init_backend(engine) is engine
    with pytest.raises(ValueError):
        init_backend('tensor-network')
