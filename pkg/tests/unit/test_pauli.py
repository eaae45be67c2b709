import numpy as np
import pytest

from cliffsim import DimensionMismatchError, PauliObservable, PauliString
from tests.conftest import random_label

Y_MATRIX = np.array([[0, -1j], [1j, 0]])


@pytest.mark.parametrize(
    'label, expected',
    [
        ('X', '+X'),
        ('+XIZY', '+XIZY'),
        ('-ZZ', '-ZZ'),
        ('-iZZ', '-iZZ'),
        ('iY', '+iY'),
    ],
)
def test_from_label__to_label(label, expected):
    assert PauliString.from_label(label).to_label() == expected


@pytest.mark.parametrize('label', ['', '+', 'XQ', '*Z', '--X'])
def test_from_label__invalid(label):
    with pytest.raises(ValueError):
        PauliString.from_label(label)


def test_y_is_hermitian():
    y = PauliString.from_label('Y')
    assert y.is_hermitian
    assert y.sign == 1
    assert np.allclose(y.to_matrix(), Y_MATRIX)


def test_big_endian_layout():
    """Qubit 0 is the most significant bit, and the leftmost letter"""
    p = PauliString.from_label('ZI')
    assert p.z_bits == 0b10
    assert p.basis_expectation(0b10) == -1
    assert p.basis_expectation(0b01) == 1
    assert np.allclose(p.to_matrix(), np.diag([1, 1, -1, -1]))


def test_properties():
    p = PauliString.from_label('-IXIZ')
    assert p.support == (1, 3)
    assert p.weight == 2
    assert p.sign == -1
    assert p.letter(1) == 'X' and p.letter(0) == 'I'
    assert p.hermitian().to_label() == '+IXIZ'
    assert not p.is_identity
    assert PauliString.identity(3).is_identity


def test_from_sparse():
    p = PauliString.from_sparse(4, {0: 'Z', 3: 'Y'})
    assert p.to_label() == '+ZIIY'
    with pytest.raises(ValueError):
        PauliString.from_sparse(2, {2: 'X'})


def test_from_key():
    p = PauliString.from_key(2, (0b11, 0b01))
    assert p.to_label() == '+XY'
    assert p.key == (0b11, 0b01)


def test_multiply__phase():
    x, y = PauliString.from_label('X'), PauliString.from_label('Y')
    assert x.multiply(y).to_label() == '+iZ'
    assert (y @ x).to_label() == '-iZ'


def test_multiply__matches_matrices(rng):
    for _ in range(50):
        n = int(rng.integers(1, 4))
        a = PauliString.from_label(random_label(n, rng))
        b = PauliString.from_label(random_label(n, rng)).scaled_phase(int(rng.integers(4)))
        assert np.allclose((a @ b).to_matrix(), a.to_matrix() @ b.to_matrix())


def test_commutes__matches_matrices(rng):
    for _ in range(50):
        n = int(rng.integers(1, 4))
        a = PauliString.from_label(random_label(n, rng))
        b = PauliString.from_label(random_label(n, rng))
        ma, mb = a.to_matrix(), b.to_matrix()
        assert a.commutes(b) == np.allclose(ma @ mb, mb @ ma)


def test_multiply__width_mismatch():
    with pytest.raises(DimensionMismatchError):
        PauliString.from_label('X').multiply(PauliString.from_label('XX'))


def test_observable__folds_phase_and_prunes():
    o = PauliObservable.from_paulis(1, [('X', 1.0), ('-X', 1.0), ('-Z', 2.0)])
    assert len(o) == 1
    assert o.terms == {(0, 1): -2.0}
    assert o.one_norm == 2.0


def test_observable__magnetization():
    o = PauliObservable.magnetization(3)
    assert len(o) == 3
    assert o.one_norm == 3.0
    assert np.allclose(PauliObservable.magnetization(1).to_matrix(), np.diag([1, -1]))


def test_observable__arithmetic():
    x = PauliObservable.from_pauli('X')
    z = PauliObservable.from_pauli('Z', 0.5)
    total = x + z
    assert np.allclose(total.to_matrix(), np.array([[0.5, 1], [1, -0.5]]))
    assert len(total - x) == 1
    assert (2 * z).terms == {(0, 1): 1.0}
    assert len(-x + x) == 0


def test_observable__width_mismatch():
    with pytest.raises(DimensionMismatchError):
        PauliObservable.from_pauli('X').add(PauliObservable.from_pauli('XX'))
