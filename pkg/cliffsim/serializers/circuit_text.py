"""Line-oriented text format for concrete circuits. Example::

    # cliffsim-circuit v1
    qubits 3
    H 0
    CZ 0 1
    NOISE +ZZI 0.999
    ROT +ZZ 0 1 -0.4
    INS +XII

Clifford gates list their target qubits. ``ROT`` gives the axis letters on its support, then the
support qubits, then the angle. ``INS`` gives a full-width label. Each ``NOISE`` line adds one
factor ``(pauli, w)`` to the channel following the gate above it.

.. automodsumm:: cliffsim.serializers.circuit_text
   :functions-only:
   :nosignatures:
"""
from logging import getLogger
from typing import Dict, List, Optional

from ..models import (
    CLIFFORD_KINDS,
    Circuit,
    CliffordGate,
    NoiseFactor,
    PauliInsertion,
    PauliNoiseChannel,
    PauliRotation,
    PauliString,
)
from .pipeline import SerializerPipeline, Stage

__all__ = ['FORMAT_VERSION', 'circuit_serializer', 'dumps', 'loads']

FORMAT_VERSION = 1
HEADER = f'# cliffsim-circuit v{FORMAT_VERSION}'

logger = getLogger(__name__)


def _format_rotation(gate: PauliRotation) -> str:
    axis = gate.axis
    letters = ''.join(axis.letter(q) for q in axis.support)
    qubits = ' '.join(map(str, axis.support))
    return f'ROT +{letters} {qubits} {gate.angle!r}'


def dumps(c: Circuit) -> str:
    lines = [HEADER, f'qubits {c.n_qubits}']
    for gate, channel in c.slots():
        if isinstance(gate, PauliRotation):
            lines.append(_format_rotation(gate))
        elif isinstance(gate, PauliInsertion):
            lines.append(f'INS {gate.pauli.to_label()}')
        else:
            lines.append(str(gate))
        for f in channel or ():
            lines.append(f'NOISE {f.pauli.to_label()} {f.w!r}')
    return '\n'.join(lines) + '\n'


def _parse_rotation(n_qubits: int, fields: List[str]) -> PauliRotation:
    label, *qubits, angle = fields
    letters = label.lstrip('+')
    if label.startswith(('-', 'i')) or len(letters) != len(qubits):
        raise ValueError(f'Invalid rotation: ROT {" ".join(fields)}')
    axis = PauliString.from_sparse(n_qubits, dict(zip(map(int, qubits), letters)))
    return PauliRotation(axis, float(angle))


def loads(text: str) -> Circuit:
    lines = [line.strip() for line in text.splitlines()]
    if not lines or lines[0] != HEADER:
        raise ValueError(f'Missing or unsupported circuit header; expected {HEADER!r}')
    n_qubits: Optional[int] = None
    gates: list = []
    factors: Dict[int, List[NoiseFactor]] = {}

    for number, line in enumerate(lines[1:], start=2):
        if not line or line.startswith('#'):
            continue
        kind, *fields = line.split()
        try:
            if kind == 'qubits':
                n_qubits = int(fields[0])
            elif n_qubits is None:
                raise ValueError('Gate before qubit count')
            elif kind == 'ROT':
                gates.append(_parse_rotation(n_qubits, fields))
            elif kind == 'INS':
                gates.append(PauliInsertion(PauliString.from_label(fields[0])))
            elif kind == 'NOISE':
                if not gates:
                    raise ValueError('Noise before any gate')
                factor = NoiseFactor(PauliString.from_label(fields[0]), float(fields[1]))
                factors.setdefault(len(gates) - 1, []).append(factor)
            elif kind.upper() in CLIFFORD_KINDS:
                gates.append(CliffordGate(kind, [int(q) for q in fields]))
            else:
                raise ValueError(f'Unknown gate kind {kind!r}')
        except (IndexError, ValueError) as e:
            raise ValueError(f'Line {number}: {line!r}: {e}') from e

    if n_qubits is None:
        raise ValueError('Circuit text has no qubit count')
    noise = [
        PauliNoiseChannel(n_qubits, factors[i]) if i in factors else None for i in range(len(gates))
    ]
    return Circuit(n_qubits, gates, noise)


circuit_serializer = SerializerPipeline(
    [Stage(dumps=dumps, loads=loads)], is_binary=False, suffix='.circuit'
)  #: Text serializer for concrete circuits
