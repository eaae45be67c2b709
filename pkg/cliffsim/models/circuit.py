"""Circuit IR: named Clifford gates, Pauli rotations and insertions, concrete (optionally noisy)
circuits, and layered parameterized circuits.

A :py:class:`ParamCircuit` is a sequence of layers, each a Clifford prefix followed by one Pauli
rotation, plus a trailing Clifford suffix. Binding angles gives an immutable :py:class:`Circuit`
whose gate layout does not depend on the angles.

.. automodsumm:: cliffsim.models.circuit
   :classes-only:
   :nosignatures:
"""
from logging import getLogger
from math import pi
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from attr import evolve, field, frozen

from .noise import PauliNoiseChannel
from .pauli import PauliString

__all__ = [
    'CLIFFORD_ANGLE_TOL',
    'CLIFFORD_KINDS',
    'Circuit',
    'CliffordConfiguration',
    'CliffordGate',
    'Gate',
    'InsertionPattern',
    'Layer',
    'ParamCircuit',
    'PauliInsertion',
    'PauliRotation',
    'clifford_power',
]

CLIFFORD_ANGLE_TOL = 1e-12
# Named Clifford gates and their arity
CLIFFORD_KINDS = {'H': 1, 'S': 1, 'X': 1, 'Y': 1, 'Z': 1, 'CZ': 2, 'CNOT': 2, 'CZ_X': 2}
HALF_PI = pi / 2

logger = getLogger(__name__)


def clifford_power(angle: float, tol: float = CLIFFORD_ANGLE_TOL) -> Optional[int]:
    """Get ``k mod 4`` if ``angle`` is ``k*pi/2`` within ``tol``, otherwise ``None``"""
    k = round(angle / HALF_PI)
    if abs(angle - k * HALF_PI) <= tol:
        return k % 4
    return None


def _check_kind(instance, attribute, value):
    if value not in CLIFFORD_KINDS:
        raise ValueError(f'Invalid Clifford gate: {value}. Choose from: {list(CLIFFORD_KINDS)}')


def _check_axis(instance, attribute, value: PauliString):
    if value.is_identity or value.sign != 1:
        raise ValueError(f'Rotation axis must be a +1-signed non-identity Pauli, got {value}')


@frozen
class CliffordGate:
    kind: str = field(converter=str.upper, validator=_check_kind)
    qubits: Tuple[int, ...] = field(converter=tuple)

    def __attrs_post_init__(self):
        if len(self.qubits) != CLIFFORD_KINDS[self.kind]:
            raise ValueError(f'{self.kind} acts on {CLIFFORD_KINDS[self.kind]} qubit(s): {self}')

    @property
    def layout(self) -> tuple:
        return (self.kind, self.qubits)

    def __str__(self):
        return ' '.join([self.kind, *map(str, self.qubits)])


@frozen
class PauliRotation:
    """``exp(-i * angle * axis / 2)``"""

    axis: PauliString = field(validator=_check_axis)
    angle: float = field(converter=float)

    @property
    def qubits(self) -> Tuple[int, ...]:
        return self.axis.support

    @property
    def layout(self) -> tuple:
        return ('ROT', self.axis.key)

    def clifford_power(self, tol: float = CLIFFORD_ANGLE_TOL) -> Optional[int]:
        return clifford_power(self.angle, tol)

    def __str__(self):
        return f'ROT {self.axis} {self.angle:g}'


@frozen
class PauliInsertion:
    pauli: PauliString = field()

    @property
    def qubits(self) -> Tuple[int, ...]:
        return self.pauli.support

    @property
    def layout(self) -> tuple:
        return ('INS', self.pauli.key)

    def __str__(self):
        return f'INS {self.pauli}'


Gate = Union[CliffordGate, PauliRotation, PauliInsertion]


def _check_gate(n_qubits: int, gate: Gate):
    if isinstance(gate, CliffordGate):
        if len(set(gate.qubits)) != len(gate.qubits):
            raise ValueError(f'Repeated target qubit in {gate}')
        if any(not 0 <= q < n_qubits for q in gate.qubits):
            raise ValueError(f'Gate {gate} out of range for {n_qubits} qubits')
    elif isinstance(gate, PauliRotation):
        if gate.axis.n_qubits != n_qubits:
            raise ValueError(f'Rotation axis {gate.axis} does not act on {n_qubits} qubits')
    elif isinstance(gate, PauliInsertion):
        if gate.pauli.n_qubits != n_qubits:
            raise ValueError(f'Insertion {gate.pauli} does not act on {n_qubits} qubits')
    else:
        raise TypeError(f'Unsupported gate type: {type(gate).__name__}')


@frozen
class Circuit:
    """A concrete gate sequence with an optional noise channel after each gate.
    ``noise`` always has one (possibly ``None``) entry per gate.
    """

    n_qubits: int = field()
    gates: Tuple[Gate, ...] = field(factory=tuple, converter=tuple)
    noise: Tuple[Optional[PauliNoiseChannel], ...] = field(factory=tuple, converter=tuple)

    def __attrs_post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f'n_qubits must be positive, got {self.n_qubits}')
        for gate in self.gates:
            _check_gate(self.n_qubits, gate)
        if not self.noise:
            object.__setattr__(self, 'noise', (None,) * len(self.gates))
        elif len(self.noise) != len(self.gates):
            raise ValueError(f'Got {len(self.noise)} noise slots for {len(self.gates)} gates')

    @property
    def is_noisy(self) -> bool:
        return any(ch is not None and not ch.is_identity for ch in self.noise)

    @property
    def rotation_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, g in enumerate(self.gates) if isinstance(g, PauliRotation))

    @property
    def n_layers(self) -> int:
        return len(self.rotation_indices)

    def is_clifford(self, tol: float = CLIFFORD_ANGLE_TOL) -> bool:
        return all(
            g.clifford_power(tol) is not None
            for g in self.gates
            if isinstance(g, PauliRotation)
        )

    def layout(self) -> Tuple[tuple, ...]:
        """Gate kinds, qubits and rotation axes, without angles"""
        return tuple(g.layout for g in self.gates)

    def slots(self) -> Iterator[Tuple[Gate, Optional[PauliNoiseChannel]]]:
        return zip(self.gates, self.noise)

    def without_noise(self) -> 'Circuit':
        return Circuit(self.n_qubits, self.gates)

    def with_noise(self, noise: Sequence[Optional[PauliNoiseChannel]]) -> 'Circuit':
        return Circuit(self.n_qubits, self.gates, noise)

    def __len__(self):
        return len(self.gates)

    def __str__(self):
        return '\n'.join(str(g) for g in self.gates)


def _check_k(instance, attribute, value):
    if any(k not in (0, 1, 2, 3) for k in value):
        raise ValueError(f'Clifford configuration entries must be in 0..3: {value}')


@frozen
class CliffordConfiguration:
    """Angle indices ``k_l``; layer ``l`` is bound to ``k_l * pi/2``"""

    k: Tuple[int, ...] = field(converter=lambda v: tuple(int(i) for i in v), validator=_check_k)

    @property
    def angles(self) -> np.ndarray:
        return np.asarray(self.k, dtype=float) * HALF_PI

    def __iter__(self):
        return iter(self.k)

    def __len__(self):
        return len(self.k)

    def __str__(self):
        return ''.join(map(str, self.k))


@frozen
class InsertionPattern:
    """One Pauli per rotation layer, inserted right after the layer's rotation and noise"""

    paulis: Tuple[PauliString, ...] = field(converter=tuple)

    @classmethod
    def identity(cls, n_qubits: int, n_layers: int) -> 'InsertionPattern':
        return cls([PauliString.identity(n_qubits)] * n_layers)

    @property
    def is_identity(self) -> bool:
        return all(p.is_identity for p in self.paulis)

    def __iter__(self):
        return iter(self.paulis)

    def __len__(self):
        return len(self.paulis)


@frozen
class Layer:
    """A Clifford prefix followed by one Pauli rotation, with optional noise after the rotation
    and an optional Pauli insertion after that
    """

    prefix: Tuple[CliffordGate, ...] = field(converter=tuple)
    axis: PauliString = field(validator=_check_axis)
    angle: float = field(default=0.0, converter=float)
    noise: Optional[PauliNoiseChannel] = field(default=None)
    insertion: Optional[PauliString] = field(default=None)

    @property
    def rotation(self) -> PauliRotation:
        return PauliRotation(self.axis, self.angle)


@frozen
class ParamCircuit:
    """A layered circuit ``U_L(theta_L) ... U_1(theta_1)`` followed by a Clifford suffix.

    ``mirror_pairs`` lists layer index pairs whose angle indices must agree under the mirror
    sampling constraint.
    """

    n_qubits: int = field()
    layers: Tuple[Layer, ...] = field(factory=tuple, converter=tuple)
    suffix: Tuple[CliffordGate, ...] = field(factory=tuple, converter=tuple)
    mirror_pairs: Tuple[Tuple[int, int], ...] = field(factory=tuple, converter=tuple)

    def __attrs_post_init__(self):
        # Binding once validates every gate against the width
        self.bind()

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def angle_values(self) -> np.ndarray:
        return np.array([layer.angle for layer in self.layers], dtype=float)

    @property
    def axes(self) -> Tuple[PauliString, ...]:
        return tuple(layer.axis for layer in self.layers)

    @property
    def layer_noise(self) -> Tuple[Optional[PauliNoiseChannel], ...]:
        return tuple(layer.noise for layer in self.layers)

    def with_angles(self, angles: Sequence[float]) -> 'ParamCircuit':
        if len(angles) != self.n_layers:
            raise ValueError(f'Got {len(angles)} angles for {self.n_layers} layers')
        layers = [evolve(layer, angle=a) for layer, a in zip(self.layers, angles)]
        return evolve(self, layers=layers)

    def with_layers(self, layers: Sequence[Layer]) -> 'ParamCircuit':
        return evolve(self, layers=layers)

    def bind(self, angles: Sequence[float] = None) -> Circuit:
        """Build a concrete circuit, using the current angles if none are given"""
        if angles is not None and len(angles) != self.n_layers:
            raise ValueError(f'Got {len(angles)} angles for {self.n_layers} layers')
        gates, noise = [], []
        for i, layer in enumerate(self.layers):
            gates.extend(layer.prefix)
            noise.extend([None] * len(layer.prefix))
            angle = layer.angle if angles is None else angles[i]
            gates.append(PauliRotation(layer.axis, angle))
            noise.append(layer.noise)
            if layer.insertion is not None:
                gates.append(PauliInsertion(layer.insertion))
                noise.append(None)
        gates.extend(self.suffix)
        noise.extend([None] * len(self.suffix))
        return Circuit(self.n_qubits, gates, noise)

    def layout(self) -> Tuple[tuple, ...]:
        return self.bind().layout()

    def __len__(self):
        return self.n_layers
