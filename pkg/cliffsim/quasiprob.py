"""Clifford quasiprobability decompositions of Pauli rotations, and the structure-preserving Monte
Carlo (SPMC) estimator built on them.

Every rotation channel ``R_P(theta)`` is written as ``sum_k a_k R_P(k*pi/2)``. Sampling one ``k``
per layer with probability ``|a_k| / l1`` gives a Clifford circuit with the target's own gate
layout, which the stabilizer engine evaluates exactly. The multi-layer SMC estimator with this
decomposition family is the same code path, so it is not implemented separately.

.. automodsumm:: cliffsim.quasiprob
   :functions-only:
   :nosignatures:
"""
from functools import lru_cache
from logging import getLogger
from math import cos, sin, sqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np
from attr import evolve

from ._utils import chunk_sizes, derive_rng, parallel_map
from .backends.stabilizer import (
    MAX_PACKED_QUBITS,
    HeisenbergBatch,
    heisenberg_noisy_expectation,
)
from .models import (
    CLIFFORD_ANGLE_TOL,
    CliffordConfiguration,
    EstimatorResult,
    GateDecomposition,
    NoiseFactor,
    ParamCircuit,
    PauliNoiseChannel,
    PauliObservable,
    PauliString,
    clifford_power,
)

__all__ = [
    'DECOMPOSITIONS',
    'bennink_decomposition',
    'critical_noise',
    'draw_configurations',
    'layer_decompositions',
    'noisy_decomposition',
    'noisy_spmc_estimate',
    'optimal_decomposition',
    'single_qubit_robustness',
    'smc_cost',
    'spmc_estimate',
    'spmc_sample_complexity',
    'spmc_variance',
    'split_axis_noise',
]

# Max trajectories drawn per worker task
CHUNK_SAMPLES = 2**15
# Angles and noise rates are quantized to this step for decomposition caching
CACHE_QUANTUM = 1e-15
TWO_PI = 2 * np.pi
# Most rotation layers whose configurations spmc_variance() will enumerate
MAX_ENUMERATED_LAYERS = 10
# cos and sin of k*pi/2
_COS = (1.0, 0.0, -1.0, 0.0)
_SIN = (0.0, 1.0, 0.0, -1.0)

logger = getLogger(__name__)


def _cos_sin(theta: float) -> Tuple[float, float]:
    """cos and sin, exact at multiples of ``pi/2``"""
    k = clifford_power(theta, CLIFFORD_ANGLE_TOL)
    if k is not None:
        return _COS[k], _SIN[k]
    return cos(theta), sin(theta)


def bennink_decomposition(theta: float) -> GateDecomposition:
    """Three-term mixture over the identity, ``S`` and ``Z`` channels, with coefficients
    ``(1 + cos - sin)/2``, ``sin`` and ``(1 - cos - sin)/2``. Its l1 norm is minimal only for
    ``theta`` in ``[0, pi/4]``.
    """
    c, s = _cos_sin(theta)
    return GateDecomposition(((1 + c - s) / 2, s, (1 - c - s) / 2, 0.0))


def optimal_decomposition(theta: float) -> GateDecomposition:
    """Minimal-l1 decomposition over ``R_P(k*pi/2)``, with ``l1 = |sin| + |cos|``"""
    return noisy_decomposition(theta, 0.0)


def noisy_decomposition(theta: float, gamma: float) -> GateDecomposition:
    """Decomposition of ``E_P o R_P(theta)``, where ``E_P`` applies ``P`` with probability
    ``gamma``. The l1 norm is ``max(1, (1 - 2*gamma)*(|sin| + |cos|))``, and the mixture is convex
    once ``gamma >= critical_noise(theta)``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f'gamma must be in [0, 1], got {gamma}')
    return _cached_decomposition(_quantize(theta % TWO_PI), _quantize(gamma))


def _quantize(value: float) -> float:
    return round(value / CACHE_QUANTUM) * CACHE_QUANTUM


@lru_cache(maxsize=4096)
def _cached_decomposition(theta: float, gamma: float) -> GateDecomposition:
    c, s = _cos_sin(theta)
    norm = abs(c) + abs(s)
    damp = 1 - 2 * gamma
    return GateDecomposition(
        (
            abs(c) / (2 * norm) + damp * c / 2,
            abs(s) / (2 * norm) + damp * s / 2,
            abs(c) / (2 * norm) - damp * c / 2,
            abs(s) / (2 * norm) - damp * s / 2,
        )
    )


def critical_noise(theta: float) -> float:
    """Axis-aligned noise rate at which a rotation becomes a convex mixture of Clifford channels"""
    c, s = _cos_sin(theta)
    gamma = 0.5 * (1 - 1 / (abs(c) + abs(s)))
    return float(min(max(gamma, 0.0), np.nextafter(0.5, 0)))


def single_qubit_robustness(bloch: Sequence[float]) -> float:
    """Robustness of magic of a single-qubit state, ``max(1, |x| + |y| + |z|)``"""
    x, y, z = bloch
    if x**2 + y**2 + z**2 > 1 + 1e-12:
        raise ValueError(f'Non-physical Bloch vector: {tuple(bloch)}')
    return max(1.0, abs(x) + abs(y) + abs(z))


DECOMPOSITIONS = {
    'bennink': bennink_decomposition,
    'optimal': optimal_decomposition,
}


def layer_decompositions(
    c: ParamCircuit, gammas: Sequence[float] = None, decomposition: str = 'optimal'
) -> List[GateDecomposition]:
    """Get one decomposition per rotation layer; any ``gammas`` select the noisy decomposition"""
    if gammas is not None:
        if len(gammas) != c.n_layers:
            raise ValueError(f'Got {len(gammas)} noise rates for {c.n_layers} layers')
        return [noisy_decomposition(a, g) for a, g in zip(c.angle_values, gammas)]
    try:
        decompose = DECOMPOSITIONS[decomposition]
    except KeyError:
        raise ValueError(
            f'Invalid decomposition: {decomposition}. Choose from: {list(DECOMPOSITIONS)}'
        )
    return [decompose(a) for a in c.angle_values]


def spmc_sample_complexity(c: ParamCircuit, eps: float, gammas: Sequence[float] = None) -> float:
    """Samples needed for additive error ``eps``: ``prod_l l1_l**2 / eps**2``. Computed in log
    space, so very deep circuits overflow to ``inf`` rather than raising.
    """
    if eps <= 0:
        raise ValueError(f'eps must be positive, got {eps}')
    decompositions = layer_decompositions(c, gammas)
    log_cost = sum(2 * np.log(d.l1) for d in decompositions) - 2 * np.log(eps)
    with np.errstate(over='ignore'):
        return float(np.exp(log_cost))


def smc_cost(c: ParamCircuit, eps: float) -> float:
    """Noiseless SMC sample count for additive error ``eps``"""
    return spmc_sample_complexity(c, eps)


def split_axis_noise(
    axis: PauliString, channel: Optional[PauliNoiseChannel]
) -> Tuple[float, Optional[PauliNoiseChannel]]:
    """Split a layer's noise into an effective axis-aligned rate and a residual channel of factors
    that commute with the axis. The residual is applied exactly as damping.

    Raises:
        :py:exc:`ValueError` if a non-axis factor anticommutes with the axis
    """
    if channel is None:
        return 0.0, None
    damping, residual = 1.0, []
    for f in channel.error_factors:
        if f.pauli.key == axis.key:
            damping *= 2 * f.w - 1
        elif f.pauli.commutes(axis):
            residual.append(NoiseFactor(f.pauli, f.w))
        else:
            raise ValueError(
                f'Noise factor {f.pauli} anticommutes with rotation axis {axis}; only axis-aligned'
                ' and commuting factors are supported'
            )
    gamma = (1 - damping) / 2
    return gamma, PauliNoiseChannel(axis.n_qubits, residual) if residual else None


def spmc_estimate(
    c: ParamCircuit,
    o: PauliObservable,
    initial=0,
    M: int = 10**4,
    seed: int = None,
    decomposition: str = 'optimal',
    threads: int = None,
) -> EstimatorResult:
    """Estimate the noiseless ``<O>`` by sampling Clifford configurations layer by layer.

    Args:
        c: Layered circuit; layer noise is ignored
        o: Hermitian observable
        initial: Initial basis state
        M: Number of sampled trajectories
        seed: Root seed; chunk ``i`` draws from the stream ``(seed, i)``
        decomposition: ``optimal`` or ``bennink``
        threads: Worker count
    """
    noiseless = c.with_layers([evolve(l, noise=None) for l in c.layers])
    decompositions = layer_decompositions(c, decomposition=decomposition)
    return _sample(noiseless, o, initial, M, seed, decompositions, threads, noisy=False)


def spmc_variance(
    c: ParamCircuit, o: PauliObservable, initial=0, decomposition: str = 'optimal'
) -> float:
    """Exact per-sample variance of :py:func:`spmc_estimate`, ``l1**2 * E[<O>_k**2] - <O>**2``,
    which its :py:attr:`~.EstimatorResult.variance_prefactor` estimates. Every one of the ``4**L``
    configurations is evaluated, so this is limited to a few rotation layers.
    """
    if c.n_layers > MAX_ENUMERATED_LAYERS:
        raise ValueError(
            f'Exact variance enumerates 4**L configurations; L={c.n_layers} is more than '
            f'{MAX_ENUMERATED_LAYERS}'
        )
    noiseless = c.with_layers([evolve(l, noise=None) for l in c.layers])
    decompositions = layer_decompositions(c, decomposition=decomposition)
    prefactor = float(np.prod([d.l1 for d in decompositions]))
    probabilities = np.array([d.probabilities for d in decompositions]).reshape(-1, 4)
    signs = np.array([d.signs for d in decompositions]).reshape(-1, 4)

    ks = np.indices((4,) * c.n_layers).reshape(c.n_layers, -1).T.astype(np.int8)
    index = ks.T.astype(np.intp)
    weights = np.prod(np.take_along_axis(probabilities, index, axis=1), axis=0)
    keep = weights > 0
    ks, weights = ks[keep], weights[keep]
    layer_signs = np.prod(np.take_along_axis(signs, index[:, keep], axis=1), axis=0)

    values = _evaluator(noiseless, o, initial, noisy=False)(ks)
    mean = prefactor * float(weights @ (layer_signs * values))
    return prefactor**2 * float(weights @ values**2) - mean**2


def noisy_spmc_estimate(
    c: ParamCircuit,
    o: PauliObservable,
    initial=0,
    M: int = 10**4,
    seed: int = None,
    threads: int = None,
) -> EstimatorResult:
    """Estimate the noisy ``<O>`` of a circuit with axis-aligned noise after each rotation, using
    the noisy decomposition per layer. Extra noise factors that commute with a layer's axis are
    applied exactly as damping; see :py:func:`split_axis_noise`.
    """
    gammas, layers = [], []
    for layer in c.layers:
        gamma, residual = split_axis_noise(layer.axis, layer.noise)
        gammas.append(gamma)
        layers.append(evolve(layer, noise=residual))
    decompositions = layer_decompositions(c, gammas)
    return _sample(c.with_layers(layers), o, initial, M, seed, decompositions, threads, noisy=True)


def _sample(
    c: ParamCircuit,
    o: PauliObservable,
    initial,
    M: int,
    seed: Optional[int],
    decompositions: List[GateDecomposition],
    threads: Optional[int],
    noisy: bool,
) -> EstimatorResult:
    if M < 1:
        raise ValueError(f'Need at least one sample, got M={M}')
    prefactor = float(np.prod([d.l1 for d in decompositions]))
    probabilities = np.array([d.probabilities for d in decompositions]).reshape(-1, 4)
    signs = np.array([d.signs for d in decompositions]).reshape(-1, 4)
    evaluate = _evaluator(c, o, initial, noisy)
    logger.debug(f'SPMC: {M} samples over {c.n_layers} layers, l1 prefactor {prefactor:.4g}')

    def run_chunk(task: Tuple[int, int]) -> Tuple[int, float, float]:
        index, size = task
        rng = derive_rng(seed, index)
        ks = draw_configurations(rng, probabilities, size)
        layer_signs = np.take_along_axis(signs, ks.T.astype(np.intp), axis=1)
        samples = np.prod(layer_signs, axis=0) * evaluate(ks)
        return size, float(samples.mean()), float(((samples - samples.mean()) ** 2).sum())

    tasks = list(enumerate(chunk_sizes(M, CHUNK_SAMPLES)))
    count, mean, m2 = 0, 0.0, 0.0
    for stats in parallel_map(run_chunk, tasks, threads):
        count, mean, m2 = _merge_stats((count, mean, m2), stats)

    variance = m2 / (count - 1) if count > 1 else 0.0
    return EstimatorResult(
        value=prefactor * mean,
        std_error=prefactor * sqrt(variance / count),
        n_samples=count,
        l1_prefactor=prefactor,
    )


def draw_configurations(
    rng: np.random.Generator, probabilities: np.ndarray, size: int
) -> np.ndarray:
    """Draw ``(size, L)`` angle indices, one categorical draw per layer"""
    cumulative = np.cumsum(probabilities, axis=1)
    uniform = rng.random((size, len(probabilities)))
    ks = np.empty(uniform.shape, dtype=np.int8)
    # Searching the unnormalized CDF never selects an angle with zero probability
    for layer, cdf in enumerate(cumulative):
        ks[:, layer] = np.searchsorted(cdf, uniform[:, layer] * cdf[-1], side='right')
    # A draw that rounds up to the total falls back to the last angle with nonzero probability
    n_angles = probabilities.shape[1]
    last = n_angles - 1 - np.argmax(probabilities[:, ::-1] > 0, axis=1)
    return np.minimum(ks, last[None, :]).astype(np.int8)


def _merge_stats(a: Tuple[int, float, float], b: Tuple[int, float, float]):
    """Combine ``(count, mean, sum of squared deviations)`` of two sample sets"""
    n_a, mean_a, m2_a = a
    n_b, mean_b, m2_b = b
    n = n_a + n_b
    if n_a == 0:
        return b
    delta = mean_b - mean_a
    return n, mean_a + delta * n_b / n, m2_a + m2_b + delta**2 * n_a * n_b / n


def _evaluator(c: ParamCircuit, o: PauliObservable, initial, noisy: bool):
    """Get a function mapping ``(B, L)`` angle indices to per-configuration expectations. Each
    distinct configuration is evaluated once.
    """
    bound = c.bind()
    if c.n_qubits <= MAX_PACKED_QUBITS:
        batch = HeisenbergBatch(bound)

        def evaluate_unique(ks: np.ndarray) -> np.ndarray:
            return batch.expectations(o, initial, ks=ks, noisy=noisy)

    else:

        def evaluate_unique(ks: np.ndarray) -> np.ndarray:
            circuits = [c.bind(CliffordConfiguration(k).angles) for k in ks]
            if not noisy:
                circuits = [circuit.without_noise() for circuit in circuits]
            return np.array([heisenberg_noisy_expectation(circ, o, initial) for circ in circuits])

    def evaluate(ks: np.ndarray) -> np.ndarray:
        unique, inverse = np.unique(ks, axis=0, return_inverse=True)
        return evaluate_unique(unique)[np.ravel(inverse)]

    return evaluate
