"""Builders for the benchmark circuit families, native-gate compilation, Clifford configuration
substitution and Pauli insertion.

.. automodsumm:: cliffsim.circuits
   :functions-only:
   :nosignatures:
"""
from logging import getLogger
from math import cos, pi, sin
from typing import Dict, List, Sequence, Tuple, TypeVar, Union

import numpy as np
from attr import evolve

from .models import (
    CLIFFORD_KINDS,
    Circuit,
    CliffordConfiguration,
    CliffordGate,
    InsertionPattern,
    Layer,
    ParamCircuit,
    PauliInsertion,
    PauliRotation,
    PauliString,
)
from .noise import axis_noise

__all__ = [
    'apply_insertion_pattern',
    'build_structured_family',
    'build_trotter_ising',
    'compile_native',
    'fig2_circuit',
    'fig2_noisy_expectations',
    'random_clifford_circuit',
    'random_rotation_circuit',
    'ring_edges',
    'substitute_configuration',
]

AnyCircuit = TypeVar('AnyCircuit', Circuit, ParamCircuit)
FloatOrSeq = Union[float, Sequence[float]]

logger = getLogger(__name__)


def ring_edges(n: int) -> List[Tuple[int, int]]:
    """Nearest-neighbour edges of a ring with periodic boundary"""
    return [(i, (i + 1) % n) for i in range(n)]


def build_trotter_ising(
    n: int, N: int, J: FloatOrSeq = 1.0, h: FloatOrSeq = -1.0, T: float = 1.0
) -> ParamCircuit:
    """Second-order Trotter circuit for the transverse-field Ising model on a ring.

    Each of the ``N`` steps is a half step of X rotations (angle ``T*h_i/N``), a full step of ZZ
    rotations on every ring edge (angle ``-2*J_ij*T/N``), then another half step of X rotations,
    for ``3*n*N`` rotation layers in total.

    Args:
        n: Number of qubits (at least 3)
        N: Number of Trotter steps
        J: Coupling, either a scalar or one value per ring edge
        h: Transverse field, either a scalar or one value per qubit
        T: Total evolution time
    """
    if n < 3:
        raise ValueError(f'The ring needs at least 3 qubits, got {n}')
    if N < 1:
        raise ValueError(f'Need at least one Trotter step, got {N}')
    edges = ring_edges(n)
    h_i = np.broadcast_to(np.asarray(h, dtype=float), (n,))
    J_ij = np.broadcast_to(np.asarray(J, dtype=float), (len(edges),))

    def x_half_step() -> List[Layer]:
        return [
            Layer((), PauliString.from_sparse(n, {i: 'X'}), 2 * T * h_i[i] / (2 * N))
            for i in range(n)
        ]

    layers = []
    for _ in range(N):
        layers += x_half_step()
        layers += [
            Layer((), PauliString.from_sparse(n, {i: 'Z', j: 'Z'}), -2 * J_ij[e] * T / N)
            for e, (i, j) in enumerate(edges)
        ]
        layers += x_half_step()
    logger.debug(f'Built Trotter circuit: n={n}, N={N}, {len(layers)} rotation layers')
    return ParamCircuit(n, layers)


def _expand_cnot(gates: Sequence[CliffordGate]) -> List[CliffordGate]:
    expanded = []
    for gate in gates:
        if gate.kind == 'CNOT':
            control, target = gate.qubits
            h_t = CliffordGate('H', [target])
            expanded += [h_t, CliffordGate('CZ', [control, target]), h_t]
        else:
            expanded.append(gate)
    return expanded


def compile_native(c: ParamCircuit) -> ParamCircuit:
    """Rewrite single-qubit X and two-qubit ZZ rotations over ``{R_Z, CZ, H}``.

    ``R_X = H R_Z H`` and ``R_ZZ(a, b) = H_b CZ H_b R_Z(b) H_b CZ H_b``. Clifford gates that follow
    a native ``R_Z`` move into the next layer's prefix (or the suffix), so each layer still holds
    exactly one rotation and the gate layout is the same for every angle assignment.
    """
    layers = []
    carry: List[CliffordGate] = []
    for layer in c.layers:
        support = layer.axis.support
        letters = {layer.axis.letter(q) for q in support}
        prefix = carry + _expand_cnot(layer.prefix)
        if len(support) == 1 and letters == {'Z'}:
            before: List[CliffordGate] = []
            after: List[CliffordGate] = []
            target = support[0]
        elif len(support) == 1 and letters == {'X'}:
            target = support[0]
            before = after = [CliffordGate('H', [target])]
        elif len(support) == 2 and letters == {'Z'}:
            control, target = support
            conj = [
                CliffordGate('H', [target]),
                CliffordGate('CZ', [control, target]),
                CliffordGate('H', [target]),
            ]
            before = after = conj
        else:
            raise ValueError(f'Unsupported rotation axis for native compilation: {layer.axis}')

        axis = PauliString.from_sparse(c.n_qubits, {target: 'Z'})
        layers.append(evolve(layer, prefix=prefix + before, axis=axis))
        carry = list(after)

    suffix = carry + _expand_cnot(c.suffix)
    return ParamCircuit(c.n_qubits, layers, suffix, c.mirror_pairs)


def build_structured_family(D: int, theta: float, phi: float) -> ParamCircuit:
    """Star-shaped family on ``2D + 1`` qubits with ``2D`` blocks, one ``R_Y`` rotation on qubit 0
    per block.

    Block ``d <= D`` is ``CZ_X(0, 2d) CZ(0, 2d-1) R_Y(theta + phi) CZ(0, 2d-1) CZ_X(0, 2d)``; block
    ``d > D`` mirrors block ``2D + 1 - d`` with angle ``theta - phi``. Layers ``l`` and
    ``2D - 1 - l`` are recorded as mirror pairs.
    """
    if D < 1:
        raise ValueError(f'Need at least one block, got D={D}')
    n = 2 * D + 1
    axis = PauliString.from_sparse(n, {0: 'Y'})
    layers = []
    carry: List[CliffordGate] = []
    for d in range(1, 2 * D + 1):
        if d <= D:
            pair, angle = d, theta + phi
        else:
            pair, angle = 2 * D + 1 - d, theta - phi
        wrap = [CliffordGate('CZ_X', [0, 2 * pair]), CliffordGate('CZ', [0, 2 * pair - 1])]
        layers.append(Layer(carry + wrap, axis, angle))
        carry = wrap[::-1]

    mirror_pairs = [(l, 2 * D - 1 - l) for l in range(D)]
    return ParamCircuit(n, layers, carry, mirror_pairs)


def substitute_configuration(
    c: ParamCircuit, k: Union[CliffordConfiguration, Sequence[int]]
) -> Circuit:
    """Bind every rotation angle to ``k_l * pi/2``; the gate layout is unchanged"""
    k = k if isinstance(k, CliffordConfiguration) else CliffordConfiguration(k)
    if len(k) != c.n_layers:
        raise ValueError(f'Configuration has {len(k)} entries for {c.n_layers} layers')
    return c.bind(k.angles)


def apply_insertion_pattern(
    c: AnyCircuit, p: Union[InsertionPattern, Sequence[PauliString]]
) -> AnyCircuit:
    """Insert one Pauli right after each rotation layer (after that layer's noise slot)"""
    p = p if isinstance(p, InsertionPattern) else InsertionPattern(p)
    if isinstance(c, ParamCircuit):
        if len(p) != c.n_layers:
            raise ValueError(f'Pattern has {len(p)} entries for {c.n_layers} layers')
        return c.with_layers([evolve(l, insertion=q) for l, q in zip(c.layers, p)])

    rotations = set(c.rotation_indices)
    if len(p) != len(rotations):
        raise ValueError(f'Pattern has {len(p)} entries for {len(rotations)} layers')
    paulis = iter(p)
    gates, noise = [], []
    for i, (gate, channel) in enumerate(c.slots()):
        gates.append(gate)
        noise.append(channel)
        if i in rotations:
            gates.append(PauliInsertion(next(paulis)))
            noise.append(None)
    return Circuit(c.n_qubits, gates, noise)


def fig2_circuit(
    theta: float,
    phi: float,
    gamma_1: float = 0.0,
    gamma_2: float = 0.0,
    with_insertions: bool = False,
) -> ParamCircuit:
    """Single-qubit ``R_X(theta)`` then ``R_Z(phi)``, each followed by axis-aligned noise. With
    ``with_insertions``, an X insertion follows the first rotation and a Z insertion the second.
    """
    x_axis, z_axis = PauliString.from_label('X'), PauliString.from_label('Z')
    layers = [
        Layer((), x_axis, theta, noise=axis_noise(x_axis, gamma_1)),
        Layer((), z_axis, phi, noise=axis_noise(z_axis, gamma_2)),
    ]
    c = ParamCircuit(1, layers)
    if with_insertions:
        c = apply_insertion_pattern(c, [x_axis, z_axis])
    return c


def fig2_noisy_expectations(
    theta: float,
    phi: float,
    gamma_1: float,
    gamma_2: float,
    with_insertions: bool = False,
) -> Dict[str, float]:
    """Closed-form noisy ``<X>`` and ``<Z>`` for :py:func:`fig2_circuit` on ``|0>``"""
    damp_1, damp_2 = 1 - 2 * gamma_1, 1 - 2 * gamma_2
    sign = -1.0 if with_insertions else 1.0
    return {
        'X': damp_1 * damp_2 * sin(theta) * sin(phi),
        'Z': sign * damp_1 * cos(theta),
    }


def random_clifford_circuit(
    n: int, n_gates: int, rng: np.random.Generator, rotations: bool = True
) -> Circuit:
    """Random Clifford circuit over every named gate, plus Clifford-angle Pauli rotations"""
    gates = []
    kinds = list(CLIFFORD_KINDS) + (['ROT', 'INS'] if rotations else [])
    for _ in range(n_gates):
        kind = kinds[rng.integers(len(kinds))]
        if kind == 'ROT':
            gates.append(PauliRotation(_random_pauli(n, rng), rng.integers(4) * pi / 2))
        elif kind == 'INS':
            gates.append(PauliInsertion(_random_pauli(n, rng, allow_identity=True)))
        elif CLIFFORD_KINDS[kind] == 2 and n < 2:
            gates.append(CliffordGate('H', [0]))
        else:
            qubits = rng.choice(n, size=CLIFFORD_KINDS[kind], replace=False)
            gates.append(CliffordGate(kind, qubits.tolist()))
    return Circuit(n, gates)


def random_rotation_circuit(n: int, n_gates: int, rng: np.random.Generator) -> Circuit:
    """Random Clifford circuit where every rotation gets an arbitrary angle"""
    circuit = random_clifford_circuit(n, n_gates, rng)
    gates = [
        PauliRotation(g.axis, rng.uniform(-pi, pi)) if isinstance(g, PauliRotation) else g
        for g in circuit.gates
    ]
    return Circuit(n, gates)


def _random_pauli(n: int, rng: np.random.Generator, allow_identity: bool = False) -> PauliString:
    while True:
        x_bits, z_bits = (int(v) for v in rng.integers(0, 2**n, size=2))
        if allow_identity or x_bits or z_bits:
            return PauliString.from_key(n, (x_bits, z_bits))
