from math import pi

import numpy as np
import pytest

from cliffsim import (
    PauliObservable,
    PauliPathSet,
    PauliString,
    SpdEngine,
    TruncationPolicy,
    attach_axis_noise,
    build_structured_family,
    init_backend,
    random_rotation_circuit,
    spd_expectation,
    spd_propagate,
    split_angle,
)
from cliffsim.backends.spd import propagate_rotation, truncate
from tests.conftest import ATOL, N_RANDOM_CIRCUITS, dense_expectation, random_label


@pytest.mark.parametrize(
    'theta, expected',
    [
        (0.1, (0.1, 0)),
        (pi / 4, (pi / 4, 0)),
        (pi, (0.0, 2)),
        (-pi / 2, (0.0, 3)),
        (2.0, (2.0 - pi / 2, 1)),
    ],
)
def test_split_angle(theta, expected):
    residual, k = split_angle(theta)
    assert residual == pytest.approx(expected[0], abs=1e-15)
    assert k == expected[1]
    assert abs(residual) <= pi / 4 + 1e-15


def test_spd_expectation__untruncated_matches_dense(rng):
    for _ in range(N_RANDOM_CIRCUITS):
        n = int(rng.integers(1, 6))
        c = random_rotation_circuit(n, int(rng.integers(1, 25)), rng)
        o = PauliObservable.from_pauli(random_label(n, rng))
        initial = int(rng.integers(2**n))
        assert spd_expectation(c, o, initial) == pytest.approx(
            dense_expectation(c, o, initial), abs=ATOL
        )


def test_spd_expectation__ignores_noise(small_trotter):
    noisy = attach_axis_noise(small_trotter, 0.1).bind()
    o = PauliObservable.magnetization(3)
    assert spd_expectation(noisy, o) == pytest.approx(dense_expectation(noisy, o), abs=ATOL)


def test_truncate__ties_broken_by_key():
    paths = {(0, 1): 0.5, (1, 0): -0.5, (1, 1): 0.1}
    assert truncate(paths, 1) == {(0, 1): 0.5}
    assert truncate(paths, 2) == {(0, 1): 0.5, (1, 0): -0.5}
    assert truncate(paths, None) is paths


def test_propagate_rotation__splits_anticommuting_paths():
    path_set = PauliPathSet.from_observable(PauliObservable.from_pauli('Z'))
    rotated = propagate_rotation(path_set, PauliString.from_label('X'), 0.3)
    assert len(rotated) == 2
    assert rotated.history == [2]
    assert rotated.l2_norm == pytest.approx(1.0)
    commuting = propagate_rotation(path_set, PauliString.from_label('Z'), 0.3)
    assert len(commuting) == 1


def test_spd_propagate__budget_respected(small_trotter, rng):
    c = small_trotter.with_angles(rng.uniform(-pi, pi, small_trotter.n_layers)).bind()
    path_set = spd_propagate(c, PauliObservable.magnetization(3), TruncationPolicy(4))
    assert len(path_set.history) == c.n_layers
    assert max(path_set.history) <= 4


@pytest.mark.parametrize('D', [1, 2, 3, 4])
def test_structured_family__exact_at_two_to_the_d(D):
    c = build_structured_family(D, 0.0, pi / 4).bind()
    o = PauliObservable.from_pauli(PauliString.from_sparse(c.n_qubits, {0: 'Z'}))
    path_set = spd_propagate(c, o, TruncationPolicy(2**D))
    assert max(path_set.history) == 2**D
    assert path_set.expectation(0) == pytest.approx(1.0, abs=ATOL)


def test_path_set__expectation():
    path_set = PauliPathSet(2, {(0, 0b01): 0.5, (0b10, 0): 2.0, (0, 0b11): -0.25})
    assert path_set.expectation('01') == pytest.approx(-0.5 + 0.25)
    expected = PauliObservable(2, {(0, 1): 0.5, (2, 0): 2.0, (0, 3): -0.25})
    assert path_set.to_observable() == expected
    with pytest.raises(ValueError):
        PauliPathSet(1, {(0, 1): 1j}).expectation(0)


def test_spd_engine():
    engine = init_backend('spd', m_max=8, unused=True)
    assert isinstance(engine, SpdEngine)
    assert engine.policy.m_max == 8
    c = build_structured_family(3, 0.0, pi / 4).bind()
    o = PauliObservable.from_pauli(PauliString.from_sparse(c.n_qubits, {0: 'Z'}))
    assert engine.expectation(c, o) == pytest.approx(1.0, abs=ATOL)
    assert np.isfinite(SpdEngine(m_max=1).expectation(c, o))
