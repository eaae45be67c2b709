from math import cos, pi, sin, sqrt

import numpy as np
import pytest

from cliffsim import (
    Circuit,
    CliffordGate,
    DenseEngine,
    DeviceEmulator,
    DeviceEmulatorConfig,
    PauliObservable,
    PauliRotation,
    PauliString,
    WidthGuardError,
    apply_shot_noise,
    channel_ptm,
    circuit_unitary,
    density_expectation,
    fig2_circuit,
    fig2_noisy_expectations,
    run_density_matrix,
    run_statevector,
    state_expectation,
)
from cliffsim.backends.dense import noisy_expectation
from tests.conftest import ANGLES, GAMMA_1, GAMMA_2, PHI, THETA

H = np.array([[1, 1], [1, -1]]) / sqrt(2)
CZ = np.diag([1, 1, 1, -1])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


def test_run_statevector__big_endian():
    state = run_statevector(Circuit(2, [CliffordGate('H', [0])]))
    assert np.allclose(state.amplitudes, [1 / sqrt(2), 0, 1 / sqrt(2), 0])
    assert state.norm == pytest.approx(1.0)
    assert np.allclose(state.probabilities(), [0.5, 0, 0.5, 0])


@pytest.mark.parametrize(
    'gate, expected',
    [
        (CliffordGate('CZ', [0, 1]), CZ),
        (CliffordGate('CNOT', [0, 1]), CNOT),
        (CliffordGate('CZ_X', [0, 1]), np.kron(H, H) @ CZ @ np.kron(H, H)),
        (CliffordGate('S', [1]), np.diag([1, 1j, 1, 1j])),
        (CliffordGate('Y', [0]), np.kron([[0, -1j], [1j, 0]], np.eye(2))),
    ],
)
def test_circuit_unitary__named_gates(gate, expected):
    assert np.allclose(circuit_unitary(Circuit(2, [gate])), expected)


@pytest.mark.parametrize('theta', ANGLES)
@pytest.mark.parametrize('label', ['X', 'ZZ', 'XY', 'YZ'])
def test_circuit_unitary__rotation(label, theta):
    axis = PauliString.from_label(label)
    u = circuit_unitary(Circuit(axis.n_qubits, [PauliRotation(axis, theta)]))
    expected = cos(theta / 2) * np.eye(2**axis.n_qubits) - 1j * sin(theta / 2) * axis.to_matrix()
    assert np.allclose(u, expected)


def test_state_expectation__matches_matrix():
    c = Circuit(
        2,
        [
            PauliRotation(PauliString.from_label('XY'), 0.4),
            CliffordGate('H', [1]),
            PauliRotation(PauliString.from_label('ZI'), 1.3),
        ],
    )
    o = PauliObservable.from_paulis(2, [('XZ', 0.5), ('YY', -1.0), ('IZ', 2.0)])
    psi = run_statevector(c).amplitudes
    expected = np.vdot(psi, o.to_matrix() @ psi).real
    assert state_expectation(run_statevector(c), o) == pytest.approx(expected)
    assert DenseEngine().expectation(c, o) == pytest.approx(expected)


def test_width_guard():
    with pytest.raises(WidthGuardError):
        run_statevector(Circuit(21))
    with pytest.raises(WidthGuardError):
        DenseEngine(max_qubits=2).expectation(Circuit(3), PauliObservable.magnetization(3))
    with pytest.raises(WidthGuardError):
        run_density_matrix(Circuit(11))


def test_density_matrix__noiseless_matches_statevector():
    c = fig2_circuit(THETA, PHI).bind()
    o = PauliObservable.from_paulis(1, [('X', 1.0), ('Z', 1.0)])
    rho = run_density_matrix(c)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert density_expectation(rho, o) == pytest.approx(state_expectation(run_statevector(c), o))


@pytest.mark.parametrize('policy', ['exhaustive', 'density'])
@pytest.mark.parametrize('with_insertions', [False, True])
def test_noisy_expectation__closed_form(policy, with_insertions):
    c = fig2_circuit(THETA, PHI, GAMMA_1, GAMMA_2, with_insertions).bind()
    cfg = DeviceEmulatorConfig(n_shots=None, trajectories=policy)
    expected = fig2_noisy_expectations(THETA, PHI, GAMMA_1, GAMMA_2, with_insertions)
    for label in ['X', 'Z']:
        value = noisy_expectation(c, PauliObservable.from_pauli(label), 0, cfg)
        assert value == pytest.approx(expected[label], abs=1e-12)


def test_noisy_expectation__sampled_trajectories():
    c = fig2_circuit(THETA, PHI, 0.2, 0.3).bind()
    cfg = DeviceEmulatorConfig(n_shots=None, trajectories='sampled', n_trajectories=20000, seed=0)
    expected = fig2_noisy_expectations(THETA, PHI, 0.2, 0.3)
    assert noisy_expectation(c, PauliObservable.from_pauli('Z'), 0, cfg) == pytest.approx(
        expected['Z'], abs=0.05
    )


def test_noisy_expectation__empty_observable():
    c = fig2_circuit(THETA, PHI).bind()
    assert noisy_expectation(c, PauliObservable(1)) == 0.0


def test_apply_shot_noise(rng):
    values = np.array([1.0, -1.0, 0.0, 0.5])
    assert np.array_equal(apply_shot_noise(values, None, rng), values)
    noisy = apply_shot_noise(np.tile(values, (2000, 1)), 1000, rng)
    assert noisy[:, 0] == pytest.approx(1.0)
    assert noisy[:, 1] == pytest.approx(-1.0)
    assert np.all(np.abs(noisy) <= 1.0)
    assert noisy[:, 3].mean() == pytest.approx(0.5, abs=0.01)
    # Standard deviation of a +/-1 average over N shots is sqrt((1 - p**2) / N)
    assert noisy[:, 2].std() == pytest.approx(sqrt(1 / 1000), rel=0.1)


def test_apply_shot_noise__shared_shots(rng):
    values = np.zeros((4000, 4))
    noisy = apply_shot_noise(values, 400, rng, shot_mode='shared')
    assert noisy.std() == pytest.approx(sqrt(1 / 100), rel=0.1)


def test_device_emulator__counts_and_keys():
    c = fig2_circuit(THETA, PHI, GAMMA_1, GAMMA_2).bind()
    o = PauliObservable.from_pauli('Z')
    device = DeviceEmulator(DeviceEmulatorConfig(n_shots=100, seed=7))
    first = device.run(c, o, key=(0, 1))
    assert device.run(c, o, key=(0, 1)) == first
    device.measure_terms(np.zeros((3, 2)), np.ones(2), key=(1,))
    assert device.calls == 5


def test_device_emulator__exact_has_no_shot_noise():
    c = fig2_circuit(THETA, PHI, GAMMA_1, GAMMA_2).bind()
    device = DeviceEmulator(DeviceEmulatorConfig.exact())
    expected = fig2_noisy_expectations(THETA, PHI, GAMMA_1, GAMMA_2)
    assert device.run(c, PauliObservable.from_pauli('X')) == pytest.approx(expected['X'])


def test_channel_ptm__rotation_at_clifford_angle():
    rotation = channel_ptm(PauliRotation(PauliString.from_label('Z'), pi / 2))
    s_gate = channel_ptm(CliffordGate('S', [0]), n_qubits=1)
    assert rotation.allclose(s_gate)


def test_channel_ptm__requires_width():
    with pytest.raises(ValueError):
        channel_ptm(CliffordGate('H', [0]))
