"""Base class for expectation engines, and the gate lowering they share.

Named gates are lowered to a few primitive operations on bit masks at the engine boundary:
``CNOT`` becomes ``H CZ H`` and ``CZ_X`` becomes ``H H CZ H H``. Conjugation rules operate on
``(x_bits, z_bits, phase_exp)`` for the operator ``i**phase_exp X^x Z^z``.

.. automodsumm:: cliffsim.backends.base
   :classes-only:
   :nosignatures:
"""
from logging import getLogger
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .._utils import parallel_map, parity, popcount
from ..exceptions import NonCliffordGateError
from ..models import (
    CLIFFORD_ANGLE_TOL,
    Circuit,
    CliffordGate,
    Gate,
    PauliInsertion,
    PauliNoiseChannel,
    PauliObservable,
    PauliRotation,
    PauliString,
)

# A computational basis state, as a bitstring (qubit 0 leftmost) or a big-endian integer
Initial = Union[str, int]
# (x_bits, z_bits, phase_exp)
PauliTriple = Tuple[int, int, int]

logger = getLogger(__name__)


class Op(NamedTuple):
    """A primitive operation. ``kind`` is one of:

    * ``H`` / ``S``: single-qubit gate on mask ``a``
    * ``CZ``: masks ``a`` and ``b``
    * ``PAULI``: conjugation by the Pauli ``(a, b)`` = ``(x_bits, z_bits)``
    * ``ROT``: rotation about the Hermitian Pauli ``(a, b)`` with ``phase_exp = c``; ``k`` is the
      Clifford power, or ``None`` for a general angle
    * ``INS``: an insertion slot; ``(a, b)`` is the default Pauli
    """

    kind: str
    a: int = 0
    b: int = 0
    c: int = 0
    k: Optional[int] = None
    angle: float = 0.0
    slot: int = -1


class LoweredCircuit(NamedTuple):
    """Primitive operations in time order, each with the noise channel that follows it"""

    n_qubits: int
    ops: Tuple[Tuple[Op, Optional[PauliNoiseChannel]], ...]
    n_layers: int


def qubit_mask(n_qubits: int, qubit: int) -> int:
    return 1 << (n_qubits - 1 - qubit)


def parse_initial(initial: Initial, n_qubits: int) -> int:
    """Convert a basis state given as a bitstring or integer to a big-endian integer"""
    if isinstance(initial, str):
        if len(initial) != n_qubits or set(initial) - {'0', '1'}:
            raise ValueError(f'Invalid basis string for {n_qubits} qubits: {initial!r}')
        return int(initial, 2)
    value = int(initial)
    if value < 0 or value >> n_qubits:
        raise ValueError(f'Basis state {value} out of range for {n_qubits} qubits')
    return value


def lower_gate(n: int, gate: Gate, tol: float = CLIFFORD_ANGLE_TOL, slot: int = -1) -> List[Op]:
    """Lower one gate to primitive operations, in time order"""
    if isinstance(gate, PauliRotation):
        axis = gate.axis
        k = gate.clifford_power(tol)
        return [Op('ROT', axis.x_bits, axis.z_bits, axis.phase_exp, k, gate.angle, slot)]
    if isinstance(gate, PauliInsertion):
        return [Op('INS', gate.pauli.x_bits, gate.pauli.z_bits, slot=slot)]
    if not isinstance(gate, CliffordGate):
        raise TypeError(f'Unsupported gate type: {type(gate).__name__}')

    masks = [qubit_mask(n, q) for q in gate.qubits]
    if gate.kind == 'H':
        return [Op('H', masks[0])]
    if gate.kind == 'S':
        return [Op('S', masks[0])]
    if gate.kind in 'XYZ':
        return [Op('PAULI', masks[0] * (gate.kind in 'XY'), masks[0] * (gate.kind in 'YZ'))]
    if gate.kind == 'CZ':
        return [Op('CZ', *masks)]
    if gate.kind == 'CNOT':
        h_t = Op('H', masks[1])
        return [h_t, Op('CZ', *masks), h_t]
    # CZ_X
    h_both = [Op('H', masks[0]), Op('H', masks[1])]
    return h_both + [Op('CZ', *masks)] + h_both


def lower_circuit(c: Circuit, tol: float = CLIFFORD_ANGLE_TOL) -> LoweredCircuit:
    """Lower a circuit. Rotations get layer slots ``0..L-1``; an insertion gets the slot of the
    rotation that precedes it.
    """
    ops = []
    layer = -1
    for gate, channel in c.slots():
        if isinstance(gate, PauliRotation):
            layer += 1
        lowered = lower_gate(c.n_qubits, gate, tol, slot=layer)
        ops.extend((op, None) for op in lowered[:-1])
        ops.append((lowered[-1], channel))
    return LoweredCircuit(c.n_qubits, tuple(ops), layer + 1)


def conjugate(op: Op, x: int, z: int, phase: int, backward: bool = True) -> PauliTriple:
    """Conjugate ``i**phase X^x Z^z`` through a Clifford operation: ``G^dag P G`` when
    ``backward``, else ``G P G^dag``. Rotations must have a Clifford power.
    """
    kind = op.kind
    if kind == 'H':
        m = op.a
        xb, zb = bool(x & m), bool(z & m)
        phase += 2 * (xb and zb)
        x = (x & ~m) | (m if zb else 0)
        z = (z & ~m) | (m if xb else 0)
    elif kind == 'S':
        if x & op.a:
            phase += 3 if backward else 1
            z ^= op.a
    elif kind == 'CZ':
        xa, xb = bool(x & op.a), bool(x & op.b)
        phase += 2 * (xa and xb)
        z ^= (op.b if xa else 0) ^ (op.a if xb else 0)
    elif kind in ('PAULI', 'INS'):
        phase += 2 * parity((x & op.b) ^ (z & op.a))
    elif kind == 'ROT':
        if op.k is None:
            raise NonCliffordGateError(f'Rotation angle {op.angle} is not a multiple of pi/2')
        if parity((x & op.b) ^ (z & op.a)):
            if op.k == 2:
                phase += 2
            elif op.k:
                # Backward: k=1 gives i*P*Q and k=3 gives -i*P*Q; forward is the reverse
                turn = 1 if (op.k == 1) == backward else 3
                phase += op.c + 2 * parity(op.b & x) + turn
                x ^= op.a
                z ^= op.b
    else:
        raise ValueError(f'Unknown operation: {kind}')
    return x, z, phase % 4


def basis_value(x: int, z: int, phase: int, basis: int) -> float:
    """``<b| i**phase X^x Z^z |b>`` for a Hermitian operator"""
    if x:
        return 0.0
    if phase % 2:
        raise ValueError('Non-Hermitian operator in basis expectation')
    sign = 1 - (phase % 4)  # i**0 = 1, i**2 = -1
    return float(sign * (1 - 2 * parity(z & basis)))


def hermitian_phase(x: int, z: int) -> int:
    return popcount(x & z) % 4


class BaseEngine:
    """Base class for expectation engines.

    Subclasses implement :py:meth:`expectation`; engines that can also model noise implement
    :py:meth:`noisy_expectation`.

    Args:
        tol: Tolerance for snapping rotation angles to multiples of ``pi/2``
        threads: Worker count for batch evaluation
    """

    name = 'base'

    def __init__(self, tol: float = CLIFFORD_ANGLE_TOL, threads: int = None, **kwargs):
        self.tol = tol
        self.threads = threads

    def expectation(self, c: Circuit, o: PauliObservable, initial: Initial = 0) -> float:
        raise NotImplementedError

    def noisy_expectation(self, c: Circuit, o: PauliObservable, initial: Initial = 0, **kwargs):
        raise NotImplementedError(f'The {self.name} engine does not simulate noise')

    def expectations(
        self, circuits: Sequence[Circuit], o: PauliObservable, initial: Initial = 0
    ) -> List[float]:
        """Evaluate many circuits in parallel"""
        return parallel_map(lambda c: self.expectation(c, o, initial), circuits, self.threads)

    def __repr__(self):
        return f'<{self.__class__.__name__}(tol={self.tol})>'


def pauli_triples(o: PauliObservable) -> Iterable[Tuple[PauliTriple, float]]:
    """Terms of a Hermitian observable as ``((x, z, phase), real coefficient)``"""
    for (x, z), coeff in o.terms.items():
        if abs(complex(coeff).imag) > 1e-12:
            raise ValueError(f'Observable coefficient {coeff} is not real')
        yield (x, z, hermitian_phase(x, z)), float(complex(coeff).real)


def to_pauli(n_qubits: int, triple: PauliTriple) -> PauliString:
    return PauliString(n_qubits, *triple)
