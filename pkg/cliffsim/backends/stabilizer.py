"""Exact Clifford-circuit expectations: a stabilizer tableau for forward simulation, and
Heisenberg back-propagation of Pauli observables, with Pauli noise applied as damping factors.

Back-propagation is done either one Pauli term at a time on Python integers (any width), or in
bulk by :py:class:`HeisenbergBatch`, which packs Pauli strings into ``uint64`` words and pushes
many Clifford configurations, insertion patterns and observable terms through the same gate
layout at once.

.. automodsumm:: cliffsim.backends.stabilizer
   :classes-only:
   :nosignatures:

.. automodsumm:: cliffsim.backends.stabilizer
   :functions-only:
   :nosignatures:
"""
from logging import getLogger
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .._utils import parity
from ..exceptions import NonCliffordGateError, check_qubits
from ..models import (
    CLIFFORD_ANGLE_TOL,
    Circuit,
    CliffordConfiguration,
    Gate,
    InsertionPattern,
    PauliNoiseChannel,
    PauliObservable,
    PauliString,
)
from .base import (
    BaseEngine,
    Initial,
    LoweredCircuit,
    Op,
    PauliTriple,
    basis_value,
    conjugate,
    lower_circuit,
    lower_gate,
    parse_initial,
    pauli_triples,
    qubit_mask,
    to_pauli,
)

__all__ = [
    'HeisenbergBatch',
    'StabilizerEngine',
    'StabilizerTableau',
    'apply_gate',
    'expectation',
    'heisenberg_noisy_expectation',
]

# Max rows (configurations x terms) propagated per numpy pass
CHUNK_ROWS = 2**16
MAX_PACKED_QUBITS = 64

logger = getLogger(__name__)


class StabilizerTableau:
    """A pure stabilizer state as ``n`` stabilizer and ``n`` destabilizer generators, each stored
    as an ``(x_bits, z_bits, phase_exp)`` triple. Mutable; use one per worker.
    """

    def __init__(self, n_qubits: int, initial: Initial = 0, tol: float = CLIFFORD_ANGLE_TOL):
        basis = parse_initial(initial, n_qubits)
        self.n_qubits = n_qubits
        self.tol = tol
        self.stabilizers: List[PauliTriple] = []
        self.destabilizers: List[PauliTriple] = []
        for q in range(n_qubits):
            mask = qubit_mask(n_qubits, q)
            self.stabilizers.append((0, mask, 2 if basis & mask else 0))
            self.destabilizers.append((mask, 0, 0))

    def apply_gate(self, g: Gate) -> 'StabilizerTableau':
        """Conjugate every generator by ``g``"""
        for op in lower_gate(self.n_qubits, g, self.tol):
            self._apply_op(op)
        return self

    def apply_circuit(self, c: Circuit) -> 'StabilizerTableau':
        check_qubits(self.n_qubits, c.n_qubits, 'tableau and circuit')
        for gate in c.gates:
            self.apply_gate(gate)
        return self

    def _apply_op(self, op: Op):
        if op.kind == 'ROT' and op.k is None:
            raise NonCliffordGateError(f'Rotation angle {op.angle} is not a multiple of pi/2')
        self.stabilizers = [conjugate(op, *p, backward=False) for p in self.stabilizers]
        self.destabilizers = [conjugate(op, *p, backward=False) for p in self.destabilizers]

    def measure_pauli(self, q: PauliString) -> int:
        """Expectation of a Hermitian Pauli: 0 if it anticommutes with any stabilizer, otherwise
        the sign relating it to a product of stabilizers
        """
        check_qubits(self.n_qubits, q.n_qubits, 'tableau and Pauli string')
        stabilizers = self.stabilizer_strings()
        if any(not s.commutes(q) for s in stabilizers):
            return 0
        product = PauliString.identity(self.n_qubits)
        for stab, destab in zip(stabilizers, self.destabilizer_strings()):
            if not destab.commutes(q):
                product = product.multiply(stab)
        # q = i**d * product, where d is 0 or 2
        return 1 if (q.phase_exp - product.phase_exp) % 4 == 0 else -1

    def stabilizer_strings(self) -> List[PauliString]:
        return [to_pauli(self.n_qubits, p) for p in self.stabilizers]

    def destabilizer_strings(self) -> List[PauliString]:
        return [to_pauli(self.n_qubits, p) for p in self.destabilizers]

    def copy(self) -> 'StabilizerTableau':
        tableau = StabilizerTableau.__new__(StabilizerTableau)
        tableau.__dict__.update(self.__dict__)
        tableau.stabilizers = list(self.stabilizers)
        tableau.destabilizers = list(self.destabilizers)
        return tableau

    def __str__(self):
        return '\n'.join(str(s) for s in self.stabilizer_strings())


def apply_gate(t: StabilizerTableau, g: Gate) -> StabilizerTableau:
    return t.apply_gate(g)


def _damp(channel: Optional[PauliNoiseChannel], x: int, z: int) -> float:
    factor = 1.0
    if channel is not None:
        for f in channel.error_factors:
            if parity((x & f.pauli.z_bits) ^ (z & f.pauli.x_bits)):
                factor *= 2 * f.w - 1
    return factor


def propagate_term(
    lowered: LoweredCircuit, term: PauliTriple, basis: int, noisy: bool = True
) -> float:
    """Back-propagate one Hermitian Pauli term and evaluate it on a basis state"""
    x, z, phase = term
    coeff = 1.0
    for op, channel in reversed(lowered.ops):
        if noisy and channel is not None:
            coeff *= _damp(channel, x, z)
            if coeff == 0:
                return 0.0
        x, z, phase = conjugate(op, x, z, phase)
    return coeff * basis_value(x, z, phase, basis)


def heisenberg_noisy_expectation(
    c: Circuit, o: PauliObservable, initial: Initial = 0, tol: float = CLIFFORD_ANGLE_TOL
) -> float:
    """Exact noisy expectation of a Clifford circuit with Pauli noise slots. Each term is
    conjugated backward through the gates and scaled by every noise slot's damping factor.
    """
    return _heisenberg(c, o, initial, tol, noisy=True)


def expectation(
    c: Circuit, o: PauliObservable, initial: Initial = 0, tol: float = CLIFFORD_ANGLE_TOL
) -> float:
    """Noiseless expectation of a Clifford circuit; noise slots are ignored"""
    return _heisenberg(c, o, initial, tol, noisy=False)


def _heisenberg(c: Circuit, o: PauliObservable, initial: Initial, tol: float, noisy: bool):
    check_qubits(c.n_qubits, o.n_qubits, 'circuit and observable')
    if not c.is_clifford(tol):
        raise NonCliffordGateError('Circuit contains a non-Clifford rotation')
    basis = parse_initial(initial, c.n_qubits)
    if c.n_qubits <= MAX_PACKED_QUBITS:
        return float(HeisenbergBatch(c, tol).expectations(o, basis, noisy=noisy)[0])
    lowered = lower_circuit(c, tol)
    return sum(coeff * propagate_term(lowered, t, basis, noisy) for t, coeff in pauli_triples(o))


# Packed uint64 kernels
_U64 = np.uint64
_ZERO, _ONE = _U64(0), _U64(1)
_SHIFTS = [_U64(s) for s in (32, 16, 8, 4, 2, 1)]


def _parity(v: np.ndarray) -> np.ndarray:
    """Elementwise parity of uint64 words, by xor-folding"""
    for shift in _SHIFTS:
        v = v ^ (v >> shift)
    return (v & _ONE).astype(bool)


def _anticommutes(x, z, px, pz) -> np.ndarray:
    return _parity((x & pz) ^ (z & px))


def _select(mask: np.ndarray, value) -> np.ndarray:
    return np.where(mask, _U64(value), _ZERO)


def pattern_array(
    patterns: Sequence[Union[InsertionPattern, Sequence[PauliString]]]
) -> np.ndarray:
    """Pack insertion patterns into a ``(B, L, 2)`` uint64 array of ``(x_bits, z_bits)``"""
    return np.array(
        [[(p.x_bits, p.z_bits) for p in pattern] for pattern in patterns], dtype=np.uint64
    ).reshape(len(patterns), -1, 2)


def config_array(configs: Sequence[Union[CliffordConfiguration, Sequence[int]]]) -> np.ndarray:
    return np.array([list(k) for k in configs], dtype=np.int8).reshape(len(configs), -1)


class HeisenbergBatch:
    """Backward propagation of many Pauli rows through one gate layout.

    Each row carries its own Clifford configuration (one angle index per rotation layer) and
    its own insertion pattern (one Pauli per layer); everything else, including noise slots,
    is shared. Limited to 64 qubits.

    Args:
        c: Circuit whose layout is propagated through. Rotation angles are used only for rows
            without a configuration, and must then be Clifford.
        tol: Tolerance for snapping rotation angles to multiples of ``pi/2``
    """

    def __init__(self, c: Circuit, tol: float = CLIFFORD_ANGLE_TOL):
        if c.n_qubits > MAX_PACKED_QUBITS:
            raise ValueError(f'Packed propagation supports at most 64 qubits, got {c.n_qubits}')
        self.n_qubits = c.n_qubits
        self.lowered = lower_circuit(c, tol)
        self.n_layers = self.lowered.n_layers
        self._noise = [
            None
            if channel is None
            else [(f.pauli.x_bits, f.pauli.z_bits, 2 * f.w - 1) for f in channel.error_factors]
            for _, channel in self.lowered.ops
        ]

    def propagate(
        self,
        x: np.ndarray,
        z: np.ndarray,
        phase: np.ndarray,
        basis: int,
        ks: np.ndarray = None,
        insertions: np.ndarray = None,
        noisy: bool = True,
    ) -> np.ndarray:
        """Propagate rows of Hermitian Pauli terms and return ``damping * <b|Q_back|b>`` per row.

        Args:
            x, z: uint64 bit vectors, one per row
            phase: Phase exponents, one per row
            basis: Initial basis state as a big-endian integer
            ks: ``(rows, L)`` angle indices; ``None`` uses the circuit's own angles
            insertions: ``(rows, L, 2)`` packed Paulis; ``None`` uses the circuit's insertions
            noisy: Apply noise slots as damping factors
        """
        x, z = x.astype(np.uint64).copy(), z.astype(np.uint64).copy()
        phase = phase.astype(np.int64).copy()
        coeff = np.ones(len(x))

        for (op, _), noise in zip(reversed(self.lowered.ops), reversed(self._noise)):
            if noisy and noise:
                for fx, fz, damp in noise:
                    coeff = np.where(_anticommutes(x, z, _U64(fx), _U64(fz)), coeff * damp, coeff)
            x, z, phase = self._conjugate(op, x, z, phase, ks, insertions)

        sign = 1 - (phase & 3)
        z_sign = 1 - 2 * _parity(z & _U64(basis)).astype(np.int64)
        return np.where(x == _ZERO, coeff * sign * z_sign, 0.0)

    def _conjugate(self, op: Op, x, z, phase, ks, insertions):
        kind = op.kind
        if kind == 'H':
            m = _U64(op.a)
            xb, zb = (x & m) != _ZERO, (z & m) != _ZERO
            phase = phase + 2 * (xb & zb)
            x, z = (x & ~m) | _select(zb, op.a), (z & ~m) | _select(xb, op.a)
        elif kind == 'S':
            xb = (x & _U64(op.a)) != _ZERO
            phase = phase + 3 * xb
            z = z ^ _select(xb, op.a)
        elif kind == 'CZ':
            xa, xb = (x & _U64(op.a)) != _ZERO, (x & _U64(op.b)) != _ZERO
            phase = phase + 2 * (xa & xb)
            z = z ^ _select(xa, op.b) ^ _select(xb, op.a)
        elif kind == 'PAULI' or (kind == 'INS' and insertions is None):
            phase = phase + 2 * _anticommutes(x, z, _U64(op.a), _U64(op.b))
        elif kind == 'INS':
            px, pz = insertions[:, op.slot, 0], insertions[:, op.slot, 1]
            phase = phase + 2 * _anticommutes(x, z, px, pz)
        elif kind == 'ROT':
            if ks is None:
                if op.k is None:
                    raise NonCliffordGateError(f'Rotation angle {op.angle} is not Clifford')
                k = np.full(len(x), op.k)
            else:
                k = ks[:, op.slot]
            px, pz = _U64(op.a), _U64(op.b)
            anti = _anticommutes(x, z, px, pz)
            phase = phase + 2 * (anti & (k == 2))
            odd = anti & (k % 2 == 1)
            # Backward conjugation: k=1 multiplies by i*P, k=3 by -i*P
            turn = np.where(k == 1, 1, 3)
            step = op.c + 2 * _parity(pz & x).astype(np.int64) + turn
            phase = phase + np.where(odd, step, 0)
            x, z = x ^ _select(odd, op.a), z ^ _select(odd, op.b)
        else:
            raise ValueError(f'Unknown operation: {kind}')
        return x, z, phase & 3

    def expectations(
        self,
        o: PauliObservable,
        initial: Initial = 0,
        ks: np.ndarray = None,
        insertions: np.ndarray = None,
        noisy: bool = True,
    ) -> np.ndarray:
        """Observable expectation for every batch entry.

        Args:
            o: Hermitian observable
            initial: Initial basis state
            ks: ``(B, L)`` angle indices, or ``None``
            insertions: ``(B, L, 2)`` packed insertion Paulis, or ``None``
            noisy: Apply noise slots as damping factors

        Returns:
            Array of shape ``(B,)``; ``B = 1`` if neither ``ks`` nor ``insertions`` is given
        """
        values, coeffs = self.term_values(o, initial, ks, insertions, noisy)
        return values @ coeffs

    def term_values(
        self,
        o: PauliObservable,
        initial: Initial = 0,
        ks: np.ndarray = None,
        insertions: np.ndarray = None,
        noisy: bool = True,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Like :py:meth:`expectations`, but keep Pauli terms separate.

        Returns:
            ``(B, T)`` per-term values and the ``(T,)`` real term coefficients
        """
        check_qubits(self.n_qubits, o.n_qubits, 'circuit and observable')
        basis = parse_initial(initial, self.n_qubits)
        ks, insertions = self._check_batch(ks, insertions)
        n_batch = len(ks) if ks is not None else len(insertions) if insertions is not None else 1
        terms = list(pauli_triples(o))
        coeffs = np.array([c for _, c in terms], dtype=float)
        n_terms = len(terms)
        if not terms:
            return np.zeros((n_batch, 0)), coeffs
        tx = np.array([t[0] for t, _ in terms], dtype=np.uint64)
        tz = np.array([t[1] for t, _ in terms], dtype=np.uint64)
        tp = np.array([t[2] for t, _ in terms], dtype=np.int64)

        per_chunk = max(1, CHUNK_ROWS // n_terms)
        values = np.empty((n_batch, n_terms))
        for start in range(0, n_batch, per_chunk):
            stop = min(start + per_chunk, n_batch)
            size = stop - start
            chunk_ks = None if ks is None else np.repeat(ks[start:stop], n_terms, axis=0)
            chunk_ins = (
                None if insertions is None else np.repeat(insertions[start:stop], n_terms, axis=0)
            )
            result = self.propagate(
                np.tile(tx, size),
                np.tile(tz, size),
                np.tile(tp, size),
                basis,
                ks=chunk_ks,
                insertions=chunk_ins,
                noisy=noisy,
            )
            values[start:stop] = result.reshape(size, n_terms)
        return values, coeffs

    def _check_batch(self, ks, insertions) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        if ks is not None:
            ks = np.asarray(ks)
            if ks.ndim != 2 or ks.shape[1] != self.n_layers:
                raise ValueError(f'Expected configurations of shape (B, {self.n_layers})')
        if insertions is not None:
            insertions = np.asarray(insertions, dtype=np.uint64)
            if insertions.ndim != 3 or insertions.shape[1] != self.n_layers:
                raise ValueError(f'Expected insertions of shape (B, {self.n_layers}, 2)')
        if ks is not None and insertions is not None and len(ks) != len(insertions):
            raise ValueError('Configurations and insertion patterns must have the same batch size')
        return ks, insertions


class StabilizerEngine(BaseEngine):
    """Exact engine for Clifford circuits. Noise slots are applied as Heisenberg damping factors
    by :py:meth:`noisy_expectation`, and ignored by :py:meth:`expectation`.
    """

    name = 'stabilizer'

    def expectation(self, c: Circuit, o: PauliObservable, initial: Initial = 0) -> float:
        return expectation(c, o, initial, self.tol)

    def noisy_expectation(
        self, c: Circuit, o: PauliObservable, initial: Initial = 0, **kwargs
    ) -> float:
        return heisenberg_noisy_expectation(c, o, initial, self.tol)

    def simulate(self, c: Circuit, initial: Initial = 0) -> StabilizerTableau:
        return StabilizerTableau(c.n_qubits, initial, self.tol).apply_circuit(c)

    def batch(self, c: Circuit) -> HeisenbergBatch:
        return HeisenbergBatch(c, self.tol)
