"""Sparse Pauli dynamics: Heisenberg-picture propagation of an observable as a sparse sum of
weighted Pauli paths, truncated to a maximum path count after every rotation.

Paths are keyed on ``(x_bits, z_bits)`` of the Hermitian Pauli; any phase picked up by
conjugation is folded into the complex weight.

.. automodsumm:: cliffsim.backends.spd
   :classes-only:
   :nosignatures:

.. automodsumm:: cliffsim.backends.spd
   :functions-only:
   :nosignatures:
"""
from heapq import nsmallest
from logging import getLogger
from math import ceil, cos, pi, sin
from typing import Dict, List, Tuple

from attr import define, field

from .._utils import parity
from ..exceptions import check_qubits
from ..models import (
    Circuit,
    Gate,
    PauliInsertion,
    PauliObservable,
    PauliRotation,
    PauliString,
    PhaseFreeKey,
    TruncationPolicy,
)
from .base import (
    BaseEngine,
    Initial,
    Op,
    basis_value,
    conjugate,
    hermitian_phase,
    lower_gate,
    parse_initial,
)

__all__ = [
    'PauliPathSet',
    'SpdEngine',
    'propagate_clifford',
    'propagate_rotation',
    'spd_expectation',
    'spd_propagate',
    'split_angle',
    'truncate',
]

HALF_PI = pi / 2
# Paths whose weights cancel below this magnitude are dropped
PRUNE_ATOL = 1e-14
IMAG_TOL = 1e-9
I_POWERS = (1, 1j, -1, -1j)

logger = getLogger(__name__)


def _prune(paths: Dict[PhaseFreeKey, complex]) -> Dict[PhaseFreeKey, complex]:
    return {k: w for k, w in paths.items() if abs(w) > PRUNE_ATOL}


@define
class PauliPathSet:
    """A sparse observable ``sum_Q a_Q Q``. ``history`` records the live path count after each
    rotation.
    """

    n_qubits: int = field()
    paths: Dict[PhaseFreeKey, complex] = field(factory=dict, converter=_prune)
    history: List[int] = field(factory=list, repr=False)

    @classmethod
    def from_observable(cls, o: PauliObservable) -> 'PauliPathSet':
        return cls(o.n_qubits, {k: complex(v) for k, v in o.terms.items()})

    def to_observable(self) -> PauliObservable:
        return PauliObservable(self.n_qubits, dict(self.paths))

    def expectation(self, initial: Initial = 0) -> float:
        """Value on a computational basis state; only Z-type paths contribute"""
        basis = parse_initial(initial, self.n_qubits)
        total = complex(
            sum(
                w * basis_value(x, z, hermitian_phase(x, z), basis)
                for (x, z), w in self.paths.items()
                if not x
            )
        )
        if abs(total.imag) > IMAG_TOL:
            raise ValueError(f'Imaginary residue {total.imag:.3g} in SPD expectation')
        return total.real

    @property
    def l2_norm(self) -> float:
        return sum(abs(w) ** 2 for w in self.paths.values()) ** 0.5

    def __len__(self):
        return len(self.paths)


def split_angle(theta: float) -> Tuple[float, int]:
    """Split ``theta = residual + k*pi/2`` with ``|residual| <= pi/4``; a residual of exactly
    ``pi/4`` goes with the smaller ``k``.

    Returns:
        ``(residual, k mod 4)``
    """
    k = ceil(theta / HALF_PI - 0.5)
    return theta - k * HALF_PI, k % 4


def _conjugate_paths(paths: Dict[PhaseFreeKey, complex], op: Op) -> Dict[PhaseFreeKey, complex]:
    conjugated = {}
    for (x, z), weight in paths.items():
        nx, nz, phase = conjugate(op, x, z, hermitian_phase(x, z))
        conjugated[(nx, nz)] = weight * I_POWERS[(phase - hermitian_phase(nx, nz)) % 4]
    return conjugated


def propagate_clifford(p: PauliPathSet, g: Gate) -> PauliPathSet:
    """Conjugate every path backward through a Clifford gate; the path count is unchanged"""
    paths = p.paths
    for op in reversed(lower_gate(p.n_qubits, g)):
        paths = _conjugate_paths(paths, op)
    return PauliPathSet(p.n_qubits, paths, p.history)


def _rotate(paths: Dict[PhaseFreeKey, complex], axis: PauliString, theta: float):
    """Backward conjugation by ``exp(-i*theta*P/2)``: an anticommuting ``Q`` becomes
    ``cos(theta)*Q + i*sin(theta)*P*Q``
    """
    px, pz, pphase = axis.x_bits, axis.z_bits, axis.phase_exp
    c, s = cos(theta), sin(theta)
    rotated: Dict[PhaseFreeKey, complex] = {}
    for (x, z), weight in paths.items():
        if not parity((x & pz) ^ (z & px)):
            rotated[(x, z)] = rotated.get((x, z), 0) + weight
            continue
        rotated[(x, z)] = rotated.get((x, z), 0) + c * weight
        nx, nz = x ^ px, z ^ pz
        phase = pphase + hermitian_phase(x, z) + 2 * parity(pz & x) + 1
        partner = s * weight * I_POWERS[(phase - hermitian_phase(nx, nz)) % 4]
        rotated[(nx, nz)] = rotated.get((nx, nz), 0) + partner
    return _prune(rotated)


def truncate(paths: Dict[PhaseFreeKey, complex], m_max: int = None) -> Dict[PhaseFreeKey, complex]:
    """Keep the ``m_max`` largest-magnitude paths, ties broken by ``(x_bits, z_bits)``"""
    if m_max is None or len(paths) <= m_max:
        return paths
    kept = nsmallest(m_max, paths.items(), key=lambda item: (-abs(item[1]), item[0]))
    return dict(kept)


def propagate_rotation(
    p: PauliPathSet, axis: PauliString, theta: float, policy: TruncationPolicy = None
) -> PauliPathSet:
    """Conjugate backward through ``exp(-i*theta*axis/2)``: the Clifford part ``k*pi/2`` is
    applied exactly, the residual angle splits anticommuting paths, and colliding paths are
    merged before truncating to ``policy.m_max``
    """
    check_qubits(p.n_qubits, axis.n_qubits, 'path set and rotation axis')
    policy = policy or TruncationPolicy()
    residual, k = split_angle(theta)
    paths = p.paths
    if k:
        clifford = Op('ROT', axis.x_bits, axis.z_bits, axis.phase_exp, k, k * HALF_PI)
        paths = _conjugate_paths(paths, clifford)
    if residual:
        paths = _rotate(paths, axis, residual)
    n_before = len(paths)
    paths = truncate(paths, policy.m_max)
    if len(paths) < n_before:
        logger.debug(f'Truncated {n_before} paths to {len(paths)}')
    return PauliPathSet(p.n_qubits, paths, p.history + [len(paths)])


def spd_propagate(c: Circuit, o: PauliObservable, policy: TruncationPolicy = None) -> PauliPathSet:
    """Back-propagate an observable through a whole circuit; noise slots are ignored"""
    check_qubits(c.n_qubits, o.n_qubits, 'circuit and observable')
    path_set = PauliPathSet.from_observable(o)
    for gate in reversed(c.gates):
        if isinstance(gate, PauliRotation):
            path_set = propagate_rotation(path_set, gate.axis, gate.angle, policy)
        elif isinstance(gate, PauliInsertion) and gate.pauli.is_identity:
            continue
        else:
            path_set = propagate_clifford(path_set, gate)
    return path_set


def spd_expectation(
    c: Circuit, o: PauliObservable, initial: Initial = 0, policy: TruncationPolicy = None
) -> float:
    """``<b|U^dag O U|b>`` from the truncated Heisenberg-evolved observable"""
    check_qubits(c.n_qubits, o.n_qubits, 'circuit and observable')
    return spd_propagate(c, o, policy).expectation(initial)


class SpdEngine(BaseEngine):
    """Sparse Pauli dynamics engine

    Args:
        m_max: Maximum number of Pauli paths kept after each rotation; ``None`` for no limit
    """

    name = 'spd'

    def __init__(self, m_max: int = None, **kwargs):
        super().__init__(**kwargs)
        self.policy = TruncationPolicy(m_max)

    def expectation(self, c: Circuit, o: PauliObservable, initial: Initial = 0) -> float:
        return spd_expectation(c, o, initial, self.policy)
