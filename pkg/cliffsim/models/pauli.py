"""Phase-tracked n-qubit Pauli operators and weighted Pauli observables.

A :py:class:`PauliString` stores the operator ``i**phase * X^x Z^z`` with the X and Z bit
vectors packed into integers. Qubit ``j`` (leftmost in text form) is bit ``n - 1 - j``, so the
integer value of a bit vector reads the same as a big-endian computational basis index, and
``to_matrix()`` is the Kronecker product in text order.

.. automodsumm:: cliffsim.models.pauli
   :classes-only:
   :nosignatures:
"""
from functools import reduce
from logging import getLogger
from typing import Dict, Iterable, Iterator, Mapping, Tuple, Union

import numpy as np
from attr import field, frozen

from .._utils import parity, popcount
from ..exceptions import check_qubits

__all__ = [
    'PauliObservable',
    'PauliString',
    'PhaseFreeKey',
    'observable_add',
    'observable_scale',
]

# (x_bits, z_bits); observables and path sets hash on this only
PhaseFreeKey = Tuple[int, int]
Number = Union[int, float, complex]

LETTERS = {(0, 0): 'I', (1, 0): 'X', (0, 1): 'Z', (1, 1): 'Y'}
PREFIXES = {0: '+', 1: '+i', 2: '-', 3: '-i'}
PHASES = {'': 0, '+': 0, '+i': 1, 'i': 1, '-': 2, '-i': 3}
I_POWERS = (1, 1j, -1, -1j)
SINGLE_MATRICES = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}

logger = getLogger(__name__)


def _check_bits(instance, attribute, value):
    if value < 0 or value >> instance.n_qubits:
        raise ValueError(f'{attribute.name} does not fit in {instance.n_qubits} qubits: {value:b}')


def _check_width(instance, attribute, value):
    if value < 1:
        raise ValueError(f'n_qubits must be positive, got {value}')


@frozen
class PauliString:
    """An n-qubit Pauli operator ``i**phase_exp * prod_j X_j^{x_j} Z_j^{z_j}``.

    ``Y`` is stored as ``x=1, z=1`` with one unit of phase, so ``PauliString.from_label('Y')`` is
    exactly the Hermitian ``Y`` matrix.
    """

    n_qubits: int = field(validator=_check_width)
    x_bits: int = field(default=0, validator=_check_bits)
    z_bits: int = field(default=0, validator=_check_bits)
    phase_exp: int = field(default=0, converter=lambda v: int(v) % 4)

    @classmethod
    def from_label(cls, label: str) -> 'PauliString':
        """Parse text form, e.g. ``'+XIZY'``, ``'-iZZ'`` or ``'XZ'`` (qubit 0 leftmost). The
        prefix is the phase of the Hermitian operator spelled by the letters.
        """
        letters = label.lstrip('+-i')
        prefix = label[: len(label) - len(letters)]
        if prefix not in PHASES or not letters:
            raise ValueError(f'Invalid Pauli label: {label!r}')
        x_bits = z_bits = n_y = 0
        for letter in letters.upper():
            if letter not in 'IXYZ':
                raise ValueError(f'Invalid Pauli letter {letter!r} in {label!r}')
            x_bits = (x_bits << 1) | (letter in 'XY')
            z_bits = (z_bits << 1) | (letter in 'ZY')
            n_y += letter == 'Y'
        return cls(len(letters), x_bits, z_bits, PHASES[prefix] + n_y)

    @classmethod
    def identity(cls, n_qubits: int) -> 'PauliString':
        return cls(n_qubits)

    @classmethod
    def from_sparse(cls, n_qubits: int, letters: Mapping[int, str]) -> 'PauliString':
        """Build a Hermitian Pauli from ``{qubit: letter}``, e.g. ``{0: 'Z', 3: 'Z'}``"""
        chars = ['I'] * n_qubits
        for qubit, letter in letters.items():
            if not 0 <= qubit < n_qubits:
                raise ValueError(f'Qubit {qubit} out of range for {n_qubits} qubits')
            chars[qubit] = letter
        return cls.from_label(''.join(chars))

    @classmethod
    def from_key(cls, n_qubits: int, key: PhaseFreeKey) -> 'PauliString':
        """The Hermitian, +1-signed Pauli for an ``(x_bits, z_bits)`` key"""
        x_bits, z_bits = key
        return cls(n_qubits, x_bits, z_bits, popcount(x_bits & z_bits))

    @property
    def key(self) -> PhaseFreeKey:
        return (self.x_bits, self.z_bits)

    @property
    def weight(self) -> int:
        """Number of qubits acted on non-trivially"""
        return popcount(self.x_bits | self.z_bits)

    @property
    def support(self) -> Tuple[int, ...]:
        mask = self.x_bits | self.z_bits
        return tuple(j for j in range(self.n_qubits) if mask >> (self.n_qubits - 1 - j) & 1)

    @property
    def sign(self) -> complex:
        """Scalar ``c`` such that this operator equals ``c`` times its Hermitian +1-signed form"""
        return I_POWERS[(self.phase_exp - popcount(self.x_bits & self.z_bits)) % 4]

    @property
    def is_hermitian(self) -> bool:
        return (self.phase_exp - popcount(self.x_bits & self.z_bits)) % 2 == 0

    @property
    def is_identity(self) -> bool:
        return not (self.x_bits or self.z_bits)

    def letter(self, qubit: int) -> str:
        shift = self.n_qubits - 1 - qubit
        return LETTERS[(self.x_bits >> shift & 1, self.z_bits >> shift & 1)]

    def hermitian(self) -> 'PauliString':
        """The +1-signed Hermitian Pauli with the same bit vectors"""
        return PauliString.from_key(self.n_qubits, self.key)

    def multiply(self, other: 'PauliString') -> 'PauliString':
        """Operator product ``self @ other``, with phase"""
        check_qubits(self.n_qubits, other.n_qubits, 'Pauli strings')
        # Moving Z^z1 past X^x2 gives a sign per overlapping site
        phase = self.phase_exp + other.phase_exp + 2 * parity(self.z_bits & other.x_bits)
        return PauliString(
            self.n_qubits, self.x_bits ^ other.x_bits, self.z_bits ^ other.z_bits, phase
        )

    def commutes(self, other: 'PauliString') -> bool:
        check_qubits(self.n_qubits, other.n_qubits, 'Pauli strings')
        return parity(self.x_bits & other.z_bits) == parity(self.z_bits & other.x_bits)

    def scaled_phase(self, power: int) -> 'PauliString':
        """Multiply by ``i**power``"""
        return PauliString(self.n_qubits, self.x_bits, self.z_bits, self.phase_exp + power)

    def basis_expectation(self, basis: int) -> complex:
        """``<b|P|b>`` for a computational basis state given as a big-endian integer"""
        if self.x_bits:
            return 0
        return I_POWERS[self.phase_exp] * (-1) ** parity(self.z_bits & basis)

    def to_label(self) -> str:
        prefix = PREFIXES[(self.phase_exp - popcount(self.x_bits & self.z_bits)) % 4]
        return prefix + ''.join(self.letter(j) for j in range(self.n_qubits))

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix, Kronecker product in qubit order"""
        hermitian = reduce(
            np.kron, [SINGLE_MATRICES[self.letter(j)] for j in range(self.n_qubits)]
        )
        return self.sign * hermitian

    def __matmul__(self, other: 'PauliString') -> 'PauliString':
        return self.multiply(other)

    def __str__(self):
        return self.to_label()

    def __repr__(self):
        return f'PauliString({self.to_label()!r})'


def _prune(terms: Dict[PhaseFreeKey, complex], atol: float = 0.0) -> Dict[PhaseFreeKey, complex]:
    return {k: v for k, v in terms.items() if abs(v) > atol}


@frozen
class PauliObservable:
    """A weighted sum of Hermitian Pauli strings ``sum_Q a_Q Q``, keyed on ``(x_bits, z_bits)``.
    Phases of added Pauli strings are folded into the coefficients, and zero terms are dropped.
    """

    n_qubits: int = field(validator=_check_width)
    terms: Dict[PhaseFreeKey, complex] = field(factory=dict, converter=_prune)

    @classmethod
    def from_paulis(
        cls, n_qubits: int, terms: Iterable[Tuple[Union[PauliString, str], Number]]
    ) -> 'PauliObservable':
        observable = cls(n_qubits)
        for pauli, coeff in terms:
            observable = observable.add_term(pauli, coeff)
        return observable

    @classmethod
    def from_pauli(cls, pauli: Union[PauliString, str], coeff: Number = 1.0) -> 'PauliObservable':
        pauli = PauliString.from_label(pauli) if isinstance(pauli, str) else pauli
        return cls(pauli.n_qubits).add_term(pauli, coeff)

    @classmethod
    def magnetization(cls, n_qubits: int) -> 'PauliObservable':
        """``M_Z = sum_i Z_i``"""
        return cls.from_paulis(
            n_qubits, [(PauliString.from_sparse(n_qubits, {i: 'Z'}), 1.0) for i in range(n_qubits)]
        )

    def add_term(self, pauli: Union[PauliString, str], coeff: Number = 1.0) -> 'PauliObservable':
        pauli = PauliString.from_label(pauli) if isinstance(pauli, str) else pauli
        check_qubits(self.n_qubits, pauli.n_qubits, 'observable and Pauli string')
        terms = dict(self.terms)
        terms[pauli.key] = terms.get(pauli.key, 0) + coeff * pauli.sign
        return PauliObservable(self.n_qubits, terms)

    def add(self, other: 'PauliObservable') -> 'PauliObservable':
        check_qubits(self.n_qubits, other.n_qubits, 'observables')
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            terms[key] = terms.get(key, 0) + coeff
        return PauliObservable(self.n_qubits, terms)

    def scale(self, factor: Number) -> 'PauliObservable':
        return PauliObservable(self.n_qubits, {k: v * factor for k, v in self.terms.items()})

    def paulis(self) -> Iterator[Tuple[PauliString, complex]]:
        """Iterate over ``(hermitian_pauli, coefficient)`` pairs"""
        for key, coeff in self.terms.items():
            yield PauliString.from_key(self.n_qubits, key), coeff

    @property
    def one_norm(self) -> float:
        return float(sum(abs(v) for v in self.terms.values()))

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        matrix = np.zeros((dim, dim), dtype=complex)
        for pauli, coeff in self.paulis():
            matrix += coeff * pauli.to_matrix()
        return matrix

    def __add__(self, other: 'PauliObservable') -> 'PauliObservable':
        return self.add(other)

    def __sub__(self, other: 'PauliObservable') -> 'PauliObservable':
        return self.add(other.scale(-1))

    def __mul__(self, factor: Number) -> 'PauliObservable':
        return self.scale(factor)

    __rmul__ = __mul__

    def __neg__(self) -> 'PauliObservable':
        return self.scale(-1)

    def __len__(self):
        return len(self.terms)

    def __str__(self):
        return ' + '.join(f'({v:g})*{p.to_label()[1:]}' for p, v in self.paulis()) or '0'


def observable_add(o: PauliObservable, other: PauliObservable) -> PauliObservable:
    return o.add(other)


def observable_scale(o: PauliObservable, factor: Number) -> PauliObservable:
    return o.scale(factor)
