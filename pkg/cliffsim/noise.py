"""Operations on Pauli noise: attaching noise to circuits, adjoint damping factors and channel
inverses.

.. automodsumm:: cliffsim.noise
   :functions-only:
   :nosignatures:
"""
from logging import getLogger
from typing import Dict, Optional, Sequence, TypeVar, Union

from attr import evolve

from .exceptions import NonInvertibleChannelError, check_qubits
from .models import (
    Circuit,
    CliffordGate,
    HardwareNoiseProfile,
    NoiseFactor,
    ParamCircuit,
    PauliNoiseChannel,
    PauliRotation,
    PauliString,
    PhaseFreeKey,
    SignedPauliMixture,
)

__all__ = [
    'attach_axis_noise',
    'attach_profile',
    'axis_noise',
    'damping_factor',
    'invert_channel',
    'profile_channel',
]

AnyCircuit = TypeVar('AnyCircuit', Circuit, ParamCircuit)

logger = getLogger(__name__)


def axis_noise(axis: PauliString, gamma: float) -> PauliNoiseChannel:
    """Noise aligned with a rotation axis: ``rho -> (1 - gamma)*rho + gamma*P rho P``"""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f'gamma must be in [0, 1], got {gamma}')
    return PauliNoiseChannel(axis.n_qubits, [NoiseFactor(axis.hermitian(), 1.0 - gamma)])


def profile_channel(
    n_qubits: int, a: int, b: int, profile: HardwareNoiseProfile
) -> PauliNoiseChannel:
    """Channel following a two-qubit gate on ``(a, b)``: one correlated ZZ factor, then
    independent X, Y and Z factors on each qubit
    """
    zz = PauliString.from_sparse(n_qubits, {a: 'Z', b: 'Z'})
    factors = [NoiseFactor(zz, 1 - profile.gamma_zz)]
    for qubit in (a, b):
        for letter, gamma in zip('XYZ', [profile.gamma_x, profile.gamma_y, profile.gamma_z]):
            pauli = PauliString.from_sparse(n_qubits, {qubit: letter})
            factors.append(NoiseFactor(pauli, 1 - gamma))
    return PauliNoiseChannel(n_qubits, factors)


def _two_qubit_support(gate) -> Optional[Sequence[int]]:
    if isinstance(gate, CliffordGate) and len(gate.qubits) == 2:
        return gate.qubits
    if isinstance(gate, PauliRotation) and gate.axis.weight == 2:
        return gate.axis.support
    return None


def _compose(existing: Optional[PauliNoiseChannel], added: PauliNoiseChannel) -> PauliNoiseChannel:
    return added if existing is None else existing.compose(added)


def attach_profile(c: Circuit, profile: HardwareNoiseProfile) -> Circuit:
    """Attach the hardware noise profile after every two-qubit gate. Single-qubit gates and
    insertions stay noiseless, except rotations when ``profile.axis_gamma`` is set.

    The result depends only on the gate layout, so every angle assignment of the same skeleton
    gets identical noise slots.
    """
    noise = []
    for gate, channel in c.slots():
        qubits = _two_qubit_support(gate)
        if qubits is not None:
            channel = _compose(channel, profile_channel(c.n_qubits, *qubits, profile))
        if isinstance(gate, PauliRotation) and profile.axis_gamma is not None:
            channel = _compose(channel, axis_noise(gate.axis, profile.axis_gamma))
        noise.append(channel)
    return c.with_noise(noise)


def attach_axis_noise(c: AnyCircuit, gamma: Union[float, Sequence[float]]) -> AnyCircuit:
    """Attach axis-aligned noise after every rotation layer, with one shared ``gamma`` or one
    value per layer
    """
    n_layers = c.n_layers
    gammas = [gamma] * n_layers if isinstance(gamma, (int, float)) else list(gamma)
    if len(gammas) != n_layers:
        raise ValueError(f'Got {len(gammas)} noise rates for {n_layers} layers')

    if isinstance(c, ParamCircuit):
        layers = [
            evolve(layer, noise=_compose(layer.noise, axis_noise(layer.axis, g)))
            for layer, g in zip(c.layers, gammas)
        ]
        return c.with_layers(layers)

    rates = dict(zip(c.rotation_indices, gammas))
    noise = [
        _compose(channel, axis_noise(gate.axis, rates[i])) if i in rates else channel
        for i, (gate, channel) in enumerate(c.slots())
    ]
    return c.with_noise(noise)


def damping_factor(ch: Optional[PauliNoiseChannel], q: PauliString) -> float:
    """Scalar by which the channel's adjoint scales the Pauli ``q``:
    ``prod_k (w_k + (1 - w_k) * s_k)``, with ``s_k = -1`` where ``P_k`` anticommutes with ``q``
    """
    if ch is None:
        return 1.0
    check_qubits(ch.n_qubits, q.n_qubits, 'channel and Pauli string')
    factor = 1.0
    for f in ch.factors:
        if not f.pauli.commutes(q):
            factor *= 2 * f.w - 1
    return factor


def invert_channel(ch: PauliNoiseChannel, atol: float = 1e-15) -> SignedPauliMixture:
    """Expand the inverse channel as a flat signed mixture of Pauli conjugations. Each factor
    inverts to ``(w*id - (1 - w)*P.P) / (2w - 1)``; Pauli channels commute, so factor order does
    not matter.
    """
    terms: Dict[PhaseFreeKey, float] = {(0, 0): 1.0}
    for f in ch.factors:
        if abs(2 * f.w - 1) <= atol:
            raise NonInvertibleChannelError(f'Noise factor {f.pauli} with w=1/2 is not invertible')
        if f.w == 1.0 or f.pauli.is_identity:
            continue
        keep, flip = f.w / (2 * f.w - 1), -(1 - f.w) / (2 * f.w - 1)
        x_p, z_p = f.pauli.key
        updated: Dict[PhaseFreeKey, float] = {}
        for (x, z), p in terms.items():
            updated[(x, z)] = updated.get((x, z), 0.0) + keep * p
            updated[(x ^ x_p, z ^ z_p)] = updated.get((x ^ x_p, z ^ z_p), 0.0) + flip * p
        terms = {k: v for k, v in updated.items() if v != 0}

    logger.debug(f'Inverted {len(ch)}-factor channel into {len(terms)} signed terms')
    mixture = [(PauliString.from_key(ch.n_qubits, key), p) for key, p in sorted(terms.items())]
    return SignedPauliMixture(ch.n_qubits, mixture)
