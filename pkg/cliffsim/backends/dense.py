"""Dense simulation: exact statevectors, small density matrices and Pauli transfer matrices, plus
the emulated noisy device (Pauli-error trajectories and finite-shot measurement noise).

All kernels act on axis 0 of a ``(2**n, m)`` array, so the same code evolves one statevector, a
block of trajectories, or the columns of a density matrix. Basis index bit ``n - 1 - q`` is qubit
``q``.

.. automodsumm:: cliffsim.backends.dense
   :classes-only:
   :nosignatures:

.. automodsumm:: cliffsim.backends.dense
   :functions-only:
   :nosignatures:
"""
from functools import lru_cache
from itertools import product
from logging import getLogger
from math import cos, sin, sqrt
from threading import Lock
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .._utils import derive_rng
from ..exceptions import WidthGuardError, check_qubits
from ..models import (
    CLIFFORD_ANGLE_TOL,
    EXHAUSTIVE_LIMIT,
    Circuit,
    DeviceEmulatorConfig,
    Gate,
    GateDecomposition,
    PauliNoiseChannel,
    PauliObservable,
    PauliRotation,
    PauliString,
    PauliTransferMatrix,
    SignedPauliMixture,
    StateVector,
)
from .base import BaseEngine, Initial, Op, lower_circuit, lower_gate, parse_initial, pauli_triples

__all__ = [
    'DeviceEmulator',
    'DenseEngine',
    'apply_shot_noise',
    'channel_ptm',
    'circuit_unitary',
    'decomposition_ptm',
    'density_expectation',
    'noisy_expectation',
    'run_density_matrix',
    'run_statevector',
    'state_expectation',
]

MAX_DENSE_QUBITS = 20
MAX_DENSITY_QUBITS = 10
MAX_PTM_QUBITS = 3
# Upper bound on amplitudes held at once when enumerating trajectories as columns
MAX_BRANCH_AMPLITUDES = 2**22
IMAG_TOL = 1e-9

logger = getLogger(__name__)


@lru_cache(maxsize=32)
def _indices(n_qubits: int) -> np.ndarray:
    return np.arange(2**n_qubits, dtype=np.int64)


def _parity_array(v: np.ndarray) -> np.ndarray:
    for shift in (32, 16, 8, 4, 2, 1):
        v = v ^ (v >> shift)
    return v & 1


@lru_cache(maxsize=256)
def _z_signs(n_qubits: int, z_bits: int) -> np.ndarray:
    """``(-1)**parity(z & b)`` for every basis index ``b``"""
    return 1 - 2 * _parity_array(_indices(n_qubits) & z_bits)


def _check_width(n_qubits: int, limit: int = MAX_DENSE_QUBITS):
    if n_qubits > limit:
        raise WidthGuardError(f'Dense simulation limited to {limit} qubits, got {n_qubits}')


def apply_pauli(psi: np.ndarray, n_qubits: int, x_bits: int, z_bits: int, phase: int = 0):
    """``i**phase X^x Z^z`` applied to the rows of ``psi``"""
    signs = _z_signs(n_qubits, z_bits)
    source = _indices(n_qubits) ^ x_bits
    factor = (1, 1j, -1, -1j)[phase % 4]
    scaled = psi * (signs if psi.ndim == 1 else signs[:, None])
    return factor * scaled[source]


def _apply_op(psi: np.ndarray, n_qubits: int, op: Op) -> np.ndarray:
    idx = _indices(n_qubits)
    kind = op.kind
    if kind == 'H':
        lo = idx[(idx & op.a) == 0]
        hi = lo | op.a
        out = psi.copy()
        out[lo] = (psi[lo] + psi[hi]) / sqrt(2)
        out[hi] = (psi[lo] - psi[hi]) / sqrt(2)
        return out
    if kind == 'S':
        out = psi.copy()
        out[(idx & op.a) != 0] *= 1j
        return out
    if kind == 'CZ':
        out = psi.copy()
        out[((idx & op.a) != 0) & ((idx & op.b) != 0)] *= -1
        return out
    if kind in ('PAULI', 'INS'):
        # Hermitian form; global phases are irrelevant
        phase = bin(op.a & op.b).count('1')
        return apply_pauli(psi, n_qubits, op.a, op.b, phase)
    if kind == 'ROT':
        # exp(-i*angle*P/2) = cos(angle/2) - i*sin(angle/2)*P
        half = op.angle / 2
        return cos(half) * psi - 1j * sin(half) * apply_pauli(psi, n_qubits, op.a, op.b, op.c)
    raise ValueError(f'Unknown operation: {kind}')


def apply_gate(psi: np.ndarray, n_qubits: int, gate: Gate) -> np.ndarray:
    for op in lower_gate(n_qubits, gate, CLIFFORD_ANGLE_TOL):
        psi = _apply_op(psi, n_qubits, op)
    return psi


def _basis_state(n_qubits: int, initial: Initial) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[parse_initial(initial, n_qubits)] = 1.0
    return psi


def run_statevector(
    c: Circuit, initial: Initial = 0, max_qubits: int = MAX_DENSE_QUBITS
) -> StateVector:
    """Exact final state of a circuit; noise slots are ignored"""
    _check_width(c.n_qubits, max_qubits)
    psi = _basis_state(c.n_qubits, initial)
    for op, _ in lower_circuit(c).ops:
        psi = _apply_op(psi, c.n_qubits, op)
    return StateVector(c.n_qubits, psi)


def _real(value: complex, what: str = 'expectation') -> float:
    if abs(value.imag) > IMAG_TOL:
        raise ValueError(f'Imaginary residue {value.imag:.3g} in {what}')
    return float(value.real)


def _term_values(psi: np.ndarray, o: PauliObservable) -> np.ndarray:
    """``<psi_j|Q_t|psi_j>`` for every term ``t`` and column ``j``: shape ``(T,)`` or ``(T, m)``"""
    n = o.n_qubits
    values = []
    for (x, z, phase), _ in pauli_triples(o):
        q_psi = apply_pauli(psi, n, x, z, phase)
        values.append(np.sum(np.conj(psi) * q_psi, axis=0))
    return np.array(values)


def state_expectation(state: Union[StateVector, np.ndarray], o: PauliObservable) -> float:
    psi = state.amplitudes if isinstance(state, StateVector) else state
    coeffs = np.array([c for _, c in pauli_triples(o)])
    return _real(complex(coeffs @ _term_values(psi, o))) if len(coeffs) else 0.0


def _evolve_density(rho: np.ndarray, n_qubits: int, op: Op) -> np.ndarray:
    """``U rho U^dag`` via two column passes"""
    left = _apply_op(rho, n_qubits, op)
    return _apply_op(left.conj().T, n_qubits, op).conj().T


def _apply_noise_density(rho: np.ndarray, n: int, channel: PauliNoiseChannel) -> np.ndarray:
    for f in channel.error_factors:
        p = f.pauli
        flipped = apply_pauli(rho, n, p.x_bits, p.z_bits, p.phase_exp)
        flipped = apply_pauli(flipped.conj().T, n, p.x_bits, p.z_bits, p.phase_exp).conj().T
        rho = f.w * rho + (1 - f.w) * flipped
    return rho


def run_density_matrix(c: Circuit, initial: Initial = 0) -> np.ndarray:
    """Exact noisy density matrix; every noise slot is applied as a channel"""
    _check_width(c.n_qubits, MAX_DENSITY_QUBITS)
    n = c.n_qubits
    rho = np.zeros((2**n, 2**n), dtype=complex)
    basis = parse_initial(initial, n)
    rho[basis, basis] = 1.0
    for op, channel in lower_circuit(c).ops:
        rho = _evolve_density(rho, n, op)
        if channel is not None:
            rho = _apply_noise_density(rho, n, channel)
    return rho


def _density_term_values(rho: np.ndarray, o: PauliObservable) -> np.ndarray:
    values = []
    for (x, z, phase), _ in pauli_triples(o):
        values.append(_real(np.trace(apply_pauli(rho, o.n_qubits, x, z, phase))))
    return np.array(values)


def density_expectation(rho: np.ndarray, o: PauliObservable) -> float:
    coeffs = np.array([c for _, c in pauli_triples(o)])
    return float(coeffs @ _density_term_values(rho, o)) if len(coeffs) else 0.0


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Full ``2**n x 2**n`` unitary of a noiseless circuit"""
    _check_width(c.n_qubits, MAX_DENSITY_QUBITS)
    u = np.eye(2**c.n_qubits, dtype=complex)
    for op, _ in lower_circuit(c).ops:
        u = _apply_op(u, c.n_qubits, op)
    return u


# Noisy device emulation
def count_error_configurations(c: Circuit) -> int:
    """Number of distinct Pauli-error configurations across all noise slots"""
    return 2 ** sum(len(ch.error_factors) for ch in c.noise if ch is not None)


def _resolve_policy(c: Circuit, cfg: DeviceEmulatorConfig) -> str:
    if cfg.trajectories != 'auto':
        return cfg.trajectories
    n_configs = count_error_configurations(c)
    if n_configs <= EXHAUSTIVE_LIMIT and n_configs * 2**c.n_qubits <= MAX_BRANCH_AMPLITUDES:
        return 'exhaustive'
    if c.n_qubits <= MAX_DENSITY_QUBITS:
        return 'density'
    return 'sampled'


def _exhaustive_term_values(c: Circuit, o: PauliObservable, initial: Initial) -> np.ndarray:
    """Enumerate every error configuration as a column, weighted by its probability"""
    n = c.n_qubits
    psi = _basis_state(n, initial)[:, None]
    probs = np.ones(1)
    for op, channel in lower_circuit(c).ops:
        psi = _apply_op(psi, n, op)
        if channel is None:
            continue
        for f in channel.error_factors:
            p = f.pauli
            flipped = apply_pauli(psi, n, p.x_bits, p.z_bits, p.phase_exp)
            psi = np.hstack([psi, flipped])
            probs = np.concatenate([f.w * probs, (1 - f.w) * probs])
    logger.debug(f'Enumerated {len(probs)} error trajectories')
    return _term_values(psi, o).real @ probs


def _sampled_term_values(
    c: Circuit, o: PauliObservable, initial: Initial, n_trajectories: int, rng
) -> np.ndarray:
    """Monte Carlo average over sampled error trajectories, evolved as columns in blocks"""
    n = c.n_qubits
    lowered = lower_circuit(c)
    block = max(1, MAX_BRANCH_AMPLITUDES // 2**n)
    totals = np.zeros(len(o))
    for start in range(0, n_trajectories, block):
        size = min(block, n_trajectories - start)
        psi = np.repeat(_basis_state(n, initial)[:, None], size, axis=1)
        for op, channel in lowered.ops:
            psi = _apply_op(psi, n, op)
            if channel is None:
                continue
            for f in channel.error_factors:
                fired = rng.random(size) >= f.w
                if fired.any():
                    p = f.pauli
                    flipped = apply_pauli(psi[:, fired], n, p.x_bits, p.z_bits, p.phase_exp)
                    psi[:, fired] = flipped
        totals += _term_values(psi, o).real.sum(axis=1)
    return totals / n_trajectories


def apply_shot_noise(
    term_values: np.ndarray,
    n_shots: Optional[int],
    rng: np.random.Generator,
    shot_mode: str = 'per_term',
) -> np.ndarray:
    """Replace each exact Pauli expectation ``p`` with ``2*Binomial(N, (1 + p)/2)/N - 1``.
    Works elementwise on arrays of any shape; the last axis indexes Pauli terms.
    """
    term_values = np.asarray(term_values, dtype=float)
    if n_shots is None or term_values.size == 0:
        return term_values
    shots = n_shots
    if shot_mode == 'shared':
        shots = max(1, n_shots // term_values.shape[-1])
    probs = np.clip((1 + term_values) / 2, 0.0, 1.0)
    return 2 * rng.binomial(shots, probs) / shots - 1


def noisy_term_values(
    c: Circuit, o: PauliObservable, initial: Initial, cfg: DeviceEmulatorConfig, rng=None
) -> np.ndarray:
    """Exact-or-sampled noisy per-term expectations, before shot noise"""
    check_qubits(c.n_qubits, o.n_qubits, 'circuit and observable')
    _check_width(c.n_qubits)
    policy = _resolve_policy(c, cfg)
    logger.debug(f'Trajectory policy for {c.n_qubits}-qubit circuit: {policy}')
    if not c.is_noisy:
        return _term_values(run_statevector(c, initial).amplitudes, o).real
    if policy == 'exhaustive':
        return _exhaustive_term_values(c, o, initial)
    if policy == 'density':
        return _density_term_values(run_density_matrix(c, initial), o)
    rng = rng if rng is not None else derive_rng(cfg.seed)
    return _sampled_term_values(c, o, initial, cfg.n_trajectories, rng)


def noisy_expectation(
    c: Circuit,
    o: PauliObservable,
    initial: Initial = 0,
    cfg: DeviceEmulatorConfig = None,
    rng: np.random.Generator = None,
) -> float:
    """Emulated noisy-device measurement of ``<O>``.

    Error trajectories are enumerated, evolved as a density matrix, or sampled (per
    ``cfg.trajectories``); then, if ``cfg.n_shots`` is set, each Pauli term is measured with
    binomial shot noise.
    """
    cfg = cfg or DeviceEmulatorConfig()
    if not len(o):
        return 0.0
    rng = rng if rng is not None else derive_rng(cfg.seed)
    values = noisy_term_values(c, o, initial, cfg, rng)
    values = apply_shot_noise(values, cfg.n_shots, rng, cfg.shot_mode)
    coeffs = np.array([coeff for _, coeff in pauli_triples(o)])
    return float(coeffs @ values)


class DeviceEmulator:
    """Emulated noisy quantum device. Each call draws from its own random stream, derived from
    the root seed and a caller-supplied task key, and is counted in :py:attr:`calls`.
    """

    def __init__(self, cfg: DeviceEmulatorConfig = None):
        self.cfg = cfg or DeviceEmulatorConfig()
        self.calls = 0
        self._lock = Lock()

    def _count(self, n: int = 1):
        with self._lock:
            self.calls += n

    def rng(self, *key: int) -> np.random.Generator:
        return derive_rng(self.cfg.seed, *key)

    def run(self, c: Circuit, o: PauliObservable, initial: Initial = 0, key=()) -> float:
        """Measure a (generally non-Clifford) noisy circuit"""
        self._count()
        return noisy_expectation(c, o, initial, self.cfg, self.rng(*key))

    def measure_terms(self, term_values: np.ndarray, coeffs: np.ndarray, key=()) -> np.ndarray:
        """Measure circuits whose exact per-term values are already known (shape ``(..., T)``);
        one device call per row
        """
        term_values = np.asarray(term_values, dtype=float)
        self._count(int(np.prod(term_values.shape[:-1])))
        noisy = apply_shot_noise(term_values, self.cfg.n_shots, self.rng(*key), self.cfg.shot_mode)
        return noisy @ coeffs


# Pauli transfer matrices
@lru_cache(maxsize=4)
def pauli_basis(n_qubits: int) -> Tuple[PauliString, ...]:
    """Hermitian Pauli basis in ``I, X, Y, Z`` lexicographic order"""
    return tuple(PauliString.from_label(''.join(p)) for p in product('IXYZ', repeat=n_qubits))


def _ptm_from_map(n_qubits: int, channel: Callable[[np.ndarray], np.ndarray]):
    _check_width(n_qubits, MAX_PTM_QUBITS)
    basis = pauli_basis(n_qubits)
    matrices = [p.to_matrix() for p in basis]
    images = [channel(m) for m in matrices]
    ptm = np.array([[np.trace(p @ e).real for e in images] for p in matrices]) / 2**n_qubits
    return PauliTransferMatrix(n_qubits, ptm)


def _unitary_map(n_qubits: int, ops: Sequence[Op]):
    def channel(m):
        for op in ops:
            m = _evolve_density(m.astype(complex), n_qubits, op)
        return m

    return channel


def _pauli_mixture_map(n_qubits: int, terms: Sequence[Tuple[PauliString, float]]):
    def channel(m):
        out = np.zeros_like(m, dtype=complex)
        for pauli, weight in terms:
            matrix = pauli.hermitian().to_matrix()
            out += weight * matrix @ m @ matrix
        return out

    return channel


def channel_ptm(
    g: Union[Gate, Circuit, PauliNoiseChannel, SignedPauliMixture], n_qubits: int = None
) -> PauliTransferMatrix:
    """Exact Pauli transfer matrix of a gate, noiseless circuit, Pauli channel or signed Pauli
    mixture on at most 3 qubits
    """
    if isinstance(g, Circuit):
        n_qubits = g.n_qubits
        ops = [op for op, _ in lower_circuit(g).ops]
        return _ptm_from_map(n_qubits, _unitary_map(n_qubits, ops))
    if isinstance(g, PauliNoiseChannel):
        ptm = PauliTransferMatrix(g.n_qubits, np.eye(4**g.n_qubits))
        for f in g.factors:
            terms = [(PauliString.identity(g.n_qubits), f.w), (f.pauli, 1 - f.w)]
            ptm = _ptm_from_map(g.n_qubits, _pauli_mixture_map(g.n_qubits, terms)) @ ptm
        return ptm
    if isinstance(g, SignedPauliMixture):
        return _ptm_from_map(g.n_qubits, _pauli_mixture_map(g.n_qubits, g.terms))
    if n_qubits is None:
        if isinstance(g, PauliRotation):
            n_qubits = g.axis.n_qubits
        else:
            raise ValueError('n_qubits is required for this gate type')
    ops = lower_gate(n_qubits, g, CLIFFORD_ANGLE_TOL)
    return _ptm_from_map(n_qubits, _unitary_map(n_qubits, ops))


def decomposition_ptm(
    axis: PauliString, decomposition: Union[GateDecomposition, Sequence[float]]
) -> PauliTransferMatrix:
    """``sum_k a_k * PTM(R_P(k*pi/2))``"""
    matrix = sum(
        a * channel_ptm(PauliRotation(axis, k * np.pi / 2)).matrix
        for k, a in enumerate(decomposition)
    )
    return PauliTransferMatrix(axis.n_qubits, matrix)


class DenseEngine(BaseEngine):
    """Exact dense engine; :py:meth:`noisy_expectation` emulates the noisy device

    Args:
        max_qubits: Width guard for statevector simulation
        device: Device settings used by :py:meth:`noisy_expectation`
    """

    name = 'dense'

    def __init__(
        self,
        max_qubits: int = MAX_DENSE_QUBITS,
        device: DeviceEmulatorConfig = None,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.max_qubits = max_qubits
        self.device = device or DeviceEmulatorConfig.exact()

    def expectation(self, c: Circuit, o: PauliObservable, initial: Initial = 0) -> float:
        check_qubits(c.n_qubits, o.n_qubits, 'circuit and observable')
        return state_expectation(run_statevector(c, initial, self.max_qubits), o)

    def noisy_expectation(
        self,
        c: Circuit,
        o: PauliObservable,
        initial: Initial = 0,
        cfg: DeviceEmulatorConfig = None,
        **kwargs,
    ) -> float:
        return noisy_expectation(c, o, initial, cfg or self.device, **kwargs)

    def statevector(self, c: Circuit, initial: Initial = 0) -> StateVector:
        return run_statevector(c, initial, self.max_qubits)

