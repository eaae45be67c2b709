"""Noisy-device-enhanced Clifford simulation (NDE-CS).

The protocol learns coefficients ``b_k`` over a sample of Clifford configurations ``k`` such that
``sum_k b_k <O>_noisy(k, P) ~ <O>_noisy(target, P)`` for every sampled Pauli insertion pattern
``P``, then reuses ``b`` with noiseless stabilizer expectations:

1. :py:func:`sample_configs` draws configurations with probability ``prod_l |a_{k_l}|`` and keeps
   the distinct ones whose noiseless expectation is nonzero
2. :py:func:`sample_patterns` draws insertion patterns, always starting with the identity pattern
3. :py:func:`collect_data` measures the target and every configuration under every pattern on the
   emulated device, for ``(M_C + 1) * M_P`` device calls
4. :py:func:`fit_coefficients` solves the linear system by truncated SVD
5. :py:func:`reconstruct` evaluates ``sum_k b_k <O>(k)`` on the noiseless stabilizer engine

:py:func:`theorem1_oracle` checks, on tiny circuits with exact data over every insertion pattern,
that the learned coefficients reproduce the noiseless expectation exactly.

.. automodsumm:: cliffsim.ndecs
   :functions-only:
   :nosignatures:
"""
from itertools import product
from logging import getLogger
from math import prod
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from attr import evolve

from ._utils import derive_rng, parallel_map
from .backends.dense import DeviceEmulator, channel_ptm, run_statevector, state_expectation
from .backends.stabilizer import HeisenbergBatch, config_array
from .circuits import apply_insertion_pattern, fig2_circuit
from .exceptions import SamplingBudgetError, check_qubits
from .models import (
    CliffordConfiguration,
    CoefficientVector,
    ConfigSample,
    DeviceEmulatorConfig,
    FitProblem,
    HardwareNoiseProfile,
    InsertionPattern,
    NdecsEstimate,
    ParamCircuit,
    PauliObservable,
    PauliString,
)
from .noise import attach_profile, invert_channel
from .quasiprob import draw_configurations, layer_decompositions

__all__ = [
    'SVD_RCOND',
    'all_configurations',
    'all_patterns',
    'check_channel_inverses',
    'collect_data',
    'fig2_counterexample',
    'fit_coefficients',
    'noiseless_values',
    'noisy_target',
    'product_coefficients',
    'reconstruct',
    'run_ndecs',
    'sample_configs',
    'sample_patterns',
    'theorem1_oracle',
]

# Singular values below this fraction of the largest are treated as zero
SVD_RCOND = 1e-10
# Draws allowed per requested configuration or pattern
ATTEMPTS_PER_SAMPLE = 100
# Configurations drawn per screening pass
SCREEN_BATCH = 1024
ORACLE_ATOL = 1e-8

ConfigsLike = Union[ConfigSample, Sequence[CliffordConfiguration], Sequence[Sequence[int]]]
logger = getLogger(__name__)


def _noiseless(c: ParamCircuit) -> ParamCircuit:
    return c.with_layers([evolve(l, noise=None, insertion=None) for l in c.layers])


def _as_configs(configs: ConfigsLike) -> List[CliffordConfiguration]:
    return [
        k if isinstance(k, CliffordConfiguration) else CliffordConfiguration(k) for k in configs
    ]


def sample_configs(
    c: ParamCircuit,
    o: PauliObservable,
    initial=0,
    M_C: int = 100,
    constraint_mode: str = 'none',
    seed: int = None,
    max_attempts: int = None,
) -> ConfigSample:
    """Sample up to ``M_C`` distinct Clifford configurations with nonzero noiseless expectation.

    Each layer's angle index is drawn independently with probability proportional to ``|a_k|``.
    With ``constraint_mode='mirror'``, the second layer of each of the circuit's mirror pairs
    copies the index drawn for the first.

    Args:
        c: Layered target circuit
        o: Hermitian observable
        initial: Initial basis state
        M_C: Number of configurations to retain
        constraint_mode: ``none`` or ``mirror``
        seed: Root seed for the draws
        max_attempts: Draw budget; defaults to ``100 * M_C``

    Raises:
        :py:exc:`.SamplingBudgetError` if no configuration was retained
    """
    if M_C < 1:
        raise ValueError(f'M_C must be at least 1, got {M_C}')
    if constraint_mode not in ('none', 'mirror'):
        raise ValueError(f'Invalid constraint mode: {constraint_mode}. Choose from: none, mirror')
    check_qubits(c.n_qubits, o.n_qubits, 'circuit and observable')
    budget = max_attempts or ATTEMPTS_PER_SAMPLE * M_C
    mirror_pairs = c.mirror_pairs if constraint_mode == 'mirror' else ()
    decompositions = layer_decompositions(c)
    probabilities = np.array([d.probabilities for d in decompositions]).reshape(-1, 4)
    free_layers = set(range(c.n_layers)) - {second for _, second in mirror_pairs}
    n_possible = prod(len(decompositions[l].support) for l in free_layers)

    rng = derive_rng(seed)
    batch = HeisenbergBatch(_noiseless(c).bind())
    tol = 1e-12 * max(o.one_norm, 1.0)
    seen, configs, values = set(), [], []
    n_draws = 0
    while n_draws < budget and len(configs) < M_C and len(seen) < n_possible:
        size = min(SCREEN_BATCH, budget - n_draws)
        ks = draw_configurations(rng, probabilities, size)
        for first, second in mirror_pairs:
            ks[:, second] = ks[:, first]
        expectations = batch.expectations(o, initial, ks=ks, noisy=False)
        for k, value in zip(ks, expectations):
            n_draws += 1
            key = tuple(int(i) for i in k)
            if key in seen:
                continue
            seen.add(key)
            if abs(value) > tol:
                configs.append(CliffordConfiguration(key))
                values.append(float(value))
            if len(configs) == M_C or n_draws == budget:
                break

    if not configs:
        raise SamplingBudgetError(
            f'No configuration with nonzero expectation found in {n_draws} draws'
        )
    if len(configs) < M_C:
        logger.warning(f'Retained {len(configs)} of {M_C} requested configurations')
    logger.debug(f'Sampled {len(configs)} configurations in {n_draws} draws')
    return ConfigSample(configs, values, n_draws)


def _random_bits(rng: np.random.Generator, n: int) -> int:
    """Uniform random ``n``-bit integer, for any ``n``"""
    return int(''.join(str(b) for b in rng.integers(0, 2, size=n)), 2)


def sample_patterns(
    L: int, n: int, M_P: int, seed: int = None, max_attempts: int = None
) -> List[InsertionPattern]:
    """Sample ``M_P`` distinct insertion patterns, each layer's Pauli uniform over ``{I,X,Y,Z}^n``.
    The all-identity pattern is always the first.
    """
    if M_P < 1:
        raise ValueError(f'M_P must be at least 1, got {M_P}')
    space = 4 ** (n * L)
    if M_P > space:
        logger.warning(f'Only {space} distinct insertion patterns exist; requested {M_P}')
        M_P = space
    budget = max_attempts or ATTEMPTS_PER_SAMPLE * M_P

    rng = derive_rng(seed)
    identity = InsertionPattern.identity(n, L)
    patterns = [identity]
    seen = {tuple(p.key for p in identity)}
    for _ in range(budget):
        if len(patterns) >= M_P:
            break
        keys = tuple((_random_bits(rng, n), _random_bits(rng, n)) for _ in range(L))
        if keys not in seen:
            seen.add(keys)
            patterns.append(InsertionPattern([PauliString.from_key(n, key) for key in keys]))
    if len(patterns) < M_P:
        logger.warning(f'Sampled {len(patterns)} of {M_P} requested insertion patterns')
    return patterns


def all_configurations(n_layers: int) -> List[CliffordConfiguration]:
    return [CliffordConfiguration(k) for k in product(range(4), repeat=n_layers)]


def all_patterns(n_layers: int, n_qubits: int) -> List[InsertionPattern]:
    """Every insertion pattern, starting with the identity pattern"""
    keys = product(range(2**n_qubits), repeat=2)
    paulis = [PauliString.from_key(n_qubits, key) for key in keys]
    return [InsertionPattern(p) for p in product(paulis, repeat=n_layers)]


def noisy_target(
    c: ParamCircuit, pattern: InsertionPattern = None, profile: HardwareNoiseProfile = None
):
    """Bind the target with an insertion pattern, keeping any layer noise and attaching the
    hardware noise profile
    """
    inserted = c if pattern is None else apply_insertion_pattern(c, pattern)
    bound = inserted.bind()
    if profile is not None and not profile.is_noiseless:
        bound = attach_profile(bound, profile)
    return bound


def collect_data(
    c: ParamCircuit,
    o: PauliObservable,
    configs: ConfigsLike,
    patterns: Sequence[InsertionPattern],
    profile: HardwareNoiseProfile = None,
    device: Union[DeviceEmulator, DeviceEmulatorConfig] = None,
    initial=0,
    threads: int = None,
) -> FitProblem:
    """Measure the noisy target and every noisy configuration circuit under every pattern.

    The target is a general circuit and is run on the emulated device. Configuration circuits are
    Clifford, so their exact noisy per-term values come from Heisenberg propagation; the device
    then only adds shot noise. Every measured circuit counts as one device call.

    Args:
        c: Layered target circuit, optionally with layer noise
        o: Hermitian observable
        configs: Configurations, one per design column
        patterns: Insertion patterns, one per design row
        profile: Hardware noise profile attached to every measured circuit
        device: Emulated device, or settings for a new one
        initial: Initial basis state
        threads: Worker count; patterns are measured in parallel
    """
    configs = _as_configs(configs)
    if not configs:
        raise ValueError('At least one configuration is required')
    if not patterns:
        raise ValueError('At least one insertion pattern is required')
    if not isinstance(device, DeviceEmulator):
        device = DeviceEmulator(device)
    ks = config_array(configs)
    calls_before = device.calls

    def measure_pattern(task: Tuple[int, InsertionPattern]) -> Tuple[float, np.ndarray]:
        index, pattern = task
        target = noisy_target(c, pattern, profile)
        rhs = device.run(target, o, initial, key=(index, 0))
        term_values, coeffs = HeisenbergBatch(target).term_values(o, initial, ks=ks, noisy=True)
        row = device.measure_terms(term_values, coeffs, key=(index, 1))
        return rhs, row

    results = parallel_map(measure_pattern, list(enumerate(patterns)), threads)
    design = np.array([row for _, row in results]).reshape(len(patterns), len(configs))
    rhs = np.array([value for value, _ in results])
    calls = device.calls - calls_before
    logger.debug(f'Collected a {design.shape} design with {calls} device calls')
    return FitProblem(design, rhs, patterns, calls)


def fit_coefficients(
    p: FitProblem, rcond: float = SVD_RCOND, ridge: float = 0.0
) -> CoefficientVector:
    """Minimum-norm least-squares solution of ``design @ b ~ rhs`` by truncated SVD.

    Args:
        p: Linear system to solve
        rcond: Singular values at or below ``rcond * max(s)`` are dropped
        ridge: Optional Tikhonov term; singular values are filtered as ``s / (s**2 + ridge)``
    """
    design, rhs = p.design, p.rhs
    if design.size == 0 or not np.any(design):
        raise ValueError('Design matrix is degenerate (all zero)')
    if ridge < 0:
        raise ValueError(f'ridge must be non-negative, got {ridge}')

    u, s, vt = np.linalg.svd(design, full_matrices=False)
    kept = s > rcond * s[0]
    s_kept = s[kept]
    filtered = s_kept / (s_kept**2 + ridge)
    b = vt[kept].T @ (filtered * (u[:, kept].T @ rhs))
    residual = float(np.linalg.norm(design @ b - rhs))
    logger.debug(f'Fit rank {int(kept.sum())} of {design.shape}; residual {residual:.3g}')
    return CoefficientVector(b, residual, int(kept.sum()))


def noiseless_values(
    c: ParamCircuit, o: PauliObservable, configs: ConfigsLike, initial=0
) -> np.ndarray:
    """Exact noiseless expectation of every configuration circuit"""
    configs = _as_configs(configs)
    batch = HeisenbergBatch(_noiseless(c).bind())
    return batch.expectations(o, initial, ks=config_array(configs), noisy=False)


def reconstruct(
    b: CoefficientVector,
    configs: ConfigsLike,
    c: ParamCircuit,
    o: PauliObservable,
    initial=0,
    truth: float = None,
) -> NdecsEstimate:
    """Estimate ``sum_k b_k <O>(k)`` with noiseless stabilizer expectations"""
    configs = _as_configs(configs)
    if len(b) != len(configs):
        raise ValueError(f'Got {len(b)} coefficients for {len(configs)} configurations')
    value = float(b.b @ noiseless_values(c, o, configs, initial))
    return NdecsEstimate.from_value(value, truth)


def product_coefficients(c: ParamCircuit, configs: ConfigsLike) -> np.ndarray:
    """Exact quasiprobability coefficients ``prod_l a_{k_l}`` of the optimal decomposition"""
    decompositions = layer_decompositions(c)
    return np.array(
        [prod(d[k_l] for d, k_l in zip(decompositions, k)) for k in _as_configs(configs)]
    )


def run_ndecs(
    c: ParamCircuit,
    o: PauliObservable,
    M_C: int,
    M_P: int,
    profile: HardwareNoiseProfile = None,
    device: DeviceEmulatorConfig = None,
    initial=0,
    seed: int = None,
    constraint_mode: str = 'none',
    truth: float = None,
    max_attempts: int = None,
    threads: int = None,
) -> Tuple[NdecsEstimate, FitProblem]:
    """Run the whole protocol with independent random streams for each stage"""
    config_seed, pattern_seed, device_seed = (
        int(s) for s in np.random.SeedSequence(seed).generate_state(3)
    )
    configs = sample_configs(c, o, initial, M_C, constraint_mode, config_seed, max_attempts)
    patterns = sample_patterns(c.n_layers, c.n_qubits, M_P, pattern_seed)
    device = evolve(device or DeviceEmulatorConfig(), seed=device_seed)
    problem = collect_data(c, o, configs, patterns, profile, device, initial, threads)
    b = fit_coefficients(problem)
    return reconstruct(b, configs, c, o, initial, truth), problem


def check_channel_inverses(
    c: ParamCircuit, profile: HardwareNoiseProfile = None, atol: float = ORACLE_ATOL
) -> bool:
    """Check that every noise slot's expanded inverse undoes it exactly, as Pauli transfer
    matrices
    """
    bound = noisy_target(c, profile=profile)
    for channel in _distinct_channels(bound.noise):
        inverse = channel_ptm(invert_channel(channel)).matrix
        composed = inverse @ channel_ptm(channel).matrix
        if not np.allclose(composed, np.eye(len(composed)), rtol=0, atol=atol):
            logger.info(f'Inverse of {len(channel)}-factor channel is not exact')
            return False
    return True


def _distinct_channels(channels: Iterable) -> list:
    distinct = []
    for channel in channels:
        if channel is not None and not channel.is_identity and channel not in distinct:
            distinct.append(channel)
    return distinct


def theorem1_oracle(
    c: ParamCircuit,
    o: PauliObservable,
    profile: HardwareNoiseProfile = None,
    initial=0,
    with_insertions: bool = True,
    atol: float = ORACLE_ATOL,
) -> bool:
    """Check that coefficients learned from exact noisy data reproduce the noiseless expectation.

    Uses every configuration and, with ``with_insertions``, every insertion pattern; without it,
    only the identity pattern, which in general fits the noisy data but not the noiseless value.
    Also checks that each noise slot's expanded inverse is exact.
    """
    if c.n_qubits > 3:
        raise ValueError(f'The exactness oracle supports at most 3 qubits, got {c.n_qubits}')
    configs = all_configurations(c.n_layers)
    if with_insertions:
        patterns = all_patterns(c.n_layers, c.n_qubits)
    else:
        patterns = [InsertionPattern.identity(c.n_qubits, c.n_layers)]

    device = DeviceEmulatorConfig.exact()
    problem = collect_data(c, o, configs, patterns, profile, device, initial)
    b = fit_coefficients(problem)
    truth = state_expectation(run_statevector(_noiseless(c).bind(), initial), o)
    estimate = reconstruct(b, configs, c, o, initial, truth)
    inverses_ok = check_channel_inverses(c, profile, atol)
    passed = estimate.eps_abs <= atol and b.residual_norm <= atol and inverses_ok
    logger.info(
        f'Exactness oracle ({len(patterns)} patterns): error {estimate.eps_abs:.3g}, '
        f'noisy residual {b.residual_norm:.3g}: {"pass" if passed else "fail"}'
    )
    return passed


def fig2_counterexample(
    theta: float, phi: float, gamma_1: float, gamma_2: float
) -> Tuple[float, float, float]:
    """Fit the two-rotation single-qubit circuit against ``X + Z`` with only the all-zero
    configuration and no insertions.

    Returns:
        ``(b_00, noisy residual, noiseless error)``; the residual is zero while the noiseless
        error is not, whenever ``gamma_2 > 0`` and ``sin(theta)*sin(phi) != 0``
    """
    c = fig2_circuit(theta, phi, gamma_1, gamma_2)
    o = PauliObservable.from_paulis(1, [('X', 1.0), ('Z', 1.0)])
    configs = [CliffordConfiguration((0, 0))]
    patterns = [InsertionPattern.identity(1, 2)]
    problem = collect_data(c, o, configs, patterns, device=DeviceEmulatorConfig.exact())
    b = fit_coefficients(problem)
    truth = float(np.sin(theta) * np.sin(phi) + np.cos(theta))
    estimate = reconstruct(b, configs, c, o, truth=truth)
    return float(b.b[0]), b.residual_norm, estimate.eps_abs
