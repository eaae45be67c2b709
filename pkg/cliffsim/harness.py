"""Experiment driver for the figure-reproduction runs: NDE-CS error grids, SMC convergence fits,
NDE-CS vs. SMC cost comparison, SPD path-budget scaling, and the ``verify`` suite.

Every command takes an :py:class:`.ExperimentManifest`, fans independent repeats and grid cells
out to a thread pool, and collects rows into a :py:class:`ResultTable` in input order, so a
manifest always reproduces the same table (apart from the ``wall_seconds`` column). With an output
directory, a command also writes its raw table, any aggregate tables, a JSON copy of the manifest
and the bound target circuit.

.. automodsumm:: cliffsim.harness
   :classes-only:
   :nosignatures:

.. automodsumm:: cliffsim.harness
   :functions-only:
   :nosignatures:
"""
import csv
import hashlib
import json
from logging import getLogger
from math import isfinite, pi
from os import makedirs
from pathlib import Path
from time import perf_counter
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from attr import define, evolve, field
from platformdirs import user_data_dir
from scipy.stats import linregress

from ._utils import derive_seed, parallel_map
from .backends.base import parse_initial
from .backends.dense import (
    DeviceEmulator,
    channel_ptm,
    decomposition_ptm,
    noisy_expectation,
    run_statevector,
    state_expectation,
)
from .backends.spd import spd_expectation, spd_propagate
from .backends.stabilizer import StabilizerEngine, heisenberg_noisy_expectation
from .circuits import (
    build_structured_family,
    build_trotter_ising,
    compile_native,
    fig2_circuit,
    fig2_noisy_expectations,
    random_clifford_circuit,
    random_rotation_circuit,
)
from .models import (
    CircuitSpec,
    DeviceEmulatorConfig,
    ExperimentManifest,
    FitProblem,
    HardwareNoiseProfile,
    NdecsEstimate,
    ParamCircuit,
    PauliObservable,
    PauliRotation,
    PauliString,
    TruncationPolicy,
)
from .ndecs import (
    all_configurations,
    collect_data,
    fig2_counterexample,
    fit_coefficients,
    reconstruct,
    sample_configs,
    sample_patterns,
    theorem1_oracle,
)
from .noise import attach_profile, axis_noise
from .quasiprob import (
    bennink_decomposition,
    critical_noise,
    noisy_decomposition,
    optimal_decomposition,
    spmc_estimate,
    spmc_sample_complexity,
    spmc_variance,
)
from .serializers import circuit_serializer, init_serializer, json_serializer, toml_serializer

__all__ = [
    'COMMANDS',
    'DEFAULT_OUTPUT_DIR',
    'VERIFY_CHECKS',
    'CheckResult',
    'ConvergenceFit',
    'ResultTable',
    'VerifyReport',
    'build_circuit',
    'build_observable',
    'cmd_ndecs_grid',
    'cmd_scaling_compare',
    'cmd_smc_convergence',
    'cmd_spd_scaling',
    'cmd_verify',
    'compute_truth',
    'grid_summary',
    'load_manifest',
    'manifest_hash',
    'save_manifest',
    'threshold_table',
]

RESULTS_VERSION = 1
RESULTS_HEADER = f'# cliffsim-results v{RESULTS_VERSION}'
DEFAULT_OUTPUT_DIR = user_data_dir('cliffsim')
#: Relative error used to extrapolate SMC sample counts
TARGET_EPS_REL = 1e-2
#: Mean errors at or below this are floating-point residue, e.g. from a Clifford-only circuit
FIT_EPS_FLOOR = 1e-12
#: Width of the Trotter circuit whose SMC prefactor is reported alongside convergence fits
PAPER_SCALE_QUBITS, PAPER_SCALE_STEPS = 16, 5

NDECS_COLUMNS = [
    'manifest_hash',
    'seed',
    'repeat',
    'repeat_seed',
    'M_C',
    'M_P',
    'n',
    'N_or_D',
    'value',
    'truth',
    'eps_abs',
    'eps_rel',
    'device_calls',
    'wall_seconds',
]

logger = getLogger(__name__)


@define
class ResultTable:
    """Append-only table of result rows, written as CSV under a versioned header line. Every row
    carries the manifest hash and root seed.
    """

    kind: str = field()
    columns: List[str] = field()
    manifest_hash: str = field(default='')
    seed: Optional[int] = field(default=None)
    rows: List[Dict[str, Any]] = field(factory=list)

    def append(self, **row):
        row = {'manifest_hash': self.manifest_hash, 'seed': self.seed, **row}
        unknown = set(row) - set(self.columns)
        if unknown:
            raise ValueError(f'Unknown columns for {self.kind} table: {sorted(unknown)}')
        self.rows.append(row)

    def extend(self, rows: Iterable[Dict[str, Any]]):
        for row in rows:
            self.append(**row)

    def column(self, name: str) -> List[Any]:
        return [row.get(name) for row in self.rows]

    @property
    def header(self) -> str:
        return f'{RESULTS_HEADER} kind={self.kind} manifest={self.manifest_hash} seed={self.seed}'

    def write(self, out_dir: Union[Path, str]) -> Path:
        """Write the table to ``<out_dir>/<kind>.csv``"""
        path = Path(out_dir) / f'{self.kind}.csv'
        makedirs(path.parent, exist_ok=True)
        with open(path, 'w', newline='') as f:
            f.write(self.header + '\n')
            writer = csv.DictWriter(
                f, fieldnames=self.columns, extrasaction='ignore', lineterminator='\n'
            )
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _format_cell(v) for k, v in row.items()})
        logger.info(f'Wrote {len(self.rows)} rows to {path}')
        return path

    @classmethod
    def read(cls, path: Union[Path, str]) -> 'ResultTable':
        """Read a table written by :py:meth:`write`; values are returned as strings"""
        with open(path, newline='') as f:
            header = f.readline().strip()
            if not header.startswith(RESULTS_HEADER):
                raise ValueError(f'Missing or unsupported results header in {path}')
            meta = dict(item.split('=', 1) for item in header.split()[3:])
            reader = csv.DictReader(f)
            rows = list(reader)
            columns = list(reader.fieldnames or [])
        seed = None if meta.get('seed') in (None, 'None') else int(meta['seed'])
        return cls(meta.get('kind', ''), columns, meta.get('manifest', ''), seed, rows)

    def __len__(self):
        return len(self.rows)


def _format_cell(value: Any) -> Any:
    if value is None:
        return ''
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def _finite(value: Optional[float]) -> Optional[float]:
    return float(value) if value is not None and isfinite(value) else None


@define
class ConvergenceFit:
    """Log-log fit of mean relative error against sample count. Values that are undefined or
    overflow, such as the fit for an all-Clifford circuit, are ``None``
    """

    slope: Optional[float] = field(converter=_finite)
    intercept: Optional[float] = field(converter=_finite)
    r_value: Optional[float] = field(converter=_finite)
    slope_stderr: Optional[float] = field(converter=_finite)
    extrapolated_samples: Optional[float] = field(converter=_finite)
    l1_prefactor_squared: Optional[float] = field(converter=_finite)
    theoretical_samples: Optional[float] = field(converter=_finite)
    paper_scale_prefactor: Optional[float] = field(converter=_finite)


@define
class CheckResult:
    name: str = field()
    passed: bool = field()
    detail: str = field(default='')
    seconds: float = field(default=0.0)


@define
class VerifyReport:
    """Machine-readable pass/fail result of every verification check"""

    checks: List[CheckResult] = field()
    passed: bool = field()

    @classmethod
    def from_checks(cls, checks: List[CheckResult]) -> 'VerifyReport':
        return cls(checks, all(check.passed for check in checks))

    @property
    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]


# Manifests
# ---------


def load_manifest(path: Union[Path, str] = None, **overrides) -> ExperimentManifest:
    """Load a manifest from TOML, JSON or YAML (by file extension); keys left out fall back to
    the desk-scale defaults. With no path, returns the defaults. Top-level ``overrides`` are
    applied last, e.g. ``seed`` from the command line.
    """
    if path is None:
        manifest = ExperimentManifest()
    else:
        path = Path(path)
        name = {'.yml': 'yaml', '.yaml': 'yaml', '.json': 'json'}.get(path.suffix, 'toml')
        serializer = init_serializer(name).set_model(ExperimentManifest)
        manifest = serializer.load(path)
        logger.debug(f'Loaded {manifest.kind} manifest from {path}')
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return evolve(manifest, **overrides) if overrides else manifest


def save_manifest(m: ExperimentManifest, path: Union[Path, str]) -> Path:
    """Save a manifest as JSON, or as TOML if ``path`` ends with ``.toml``. TOML output writes
    exact measurement (``n_shots=None``) as ``n_shots = 0``.
    """
    serializer = toml_serializer if Path(path).suffix == '.toml' else json_serializer
    return serializer.dump(m, path)


def _canonical(m: ExperimentManifest) -> str:
    full = json_serializer.stages[0].converter.unstructure(m)
    return json.dumps(full, sort_keys=True, separators=(',', ':'))


def manifest_hash(m: ExperimentManifest) -> str:
    """Short digest of a manifest's canonical JSON form"""
    return hashlib.sha256(_canonical(m).encode('utf-8')).hexdigest()[:16]


# Circuits, observables and ground truth
# --------------------------------------


def build_circuit(spec: CircuitSpec) -> ParamCircuit:
    """Build the benchmark circuit described by a manifest's circuit section"""
    if spec.family == 'structured':
        return build_structured_family(spec.blocks, spec.theta, spec.phi)
    c = build_trotter_ising(spec.n, spec.steps, spec.J, spec.h, spec.T)
    return compile_native(c) if spec.native else c


def build_observable(spec: CircuitSpec, n_qubits: int) -> PauliObservable:
    name = spec.observable
    if name == 'auto':
        name = 'z0' if spec.family == 'structured' else 'magnetization'
    if name == 'z0':
        return PauliObservable.from_pauli(PauliString.from_sparse(n_qubits, {0: 'Z'}))
    return PauliObservable.magnetization(n_qubits)


def compute_truth(
    c: ParamCircuit, o: PauliObservable, source: str = 'dense', initial=0
) -> float:
    """Noiseless ``<O>`` from the named source.

    Args:
        c: Layered circuit; layer noise is ignored
        o: Hermitian observable
        source: ``dense`` (statevector), ``analytic-identity`` (the circuit acts as the identity,
            so the value is ``<b|O|b>``), or ``untruncated-spd`` (SPD with no path limit)
        initial: Initial basis state
    """
    bound = c.bind().without_noise()
    if source == 'dense':
        return state_expectation(run_statevector(bound, initial), o)
    if source == 'analytic-identity':
        basis = parse_initial(initial, c.n_qubits)
        return float(sum(coeff * p.basis_expectation(basis) for p, coeff in o.paulis()).real)
    if source == 'untruncated-spd':
        return spd_expectation(bound, o, initial, TruncationPolicy.unbounded())
    raise ValueError(f'Invalid truth source: {source}')


def _relative(value: float, truth: float) -> Tuple[float, Optional[float]]:
    estimate = NdecsEstimate.from_value(value, truth)
    return estimate.eps_abs, estimate.eps_rel


def _n_or_d(spec: CircuitSpec) -> int:
    return spec.blocks if spec.family == 'structured' else spec.steps


def _write_inputs(m: ExperimentManifest, c: ParamCircuit, out_dir: Path):
    save_manifest(m, out_dir / 'manifest.json')
    circuit_serializer.dump(c.bind(), out_dir / 'target')


# NDE-CS grid
# -----------


def _grid_cells(m: ExperimentManifest) -> List[Tuple[int, int]]:
    return [(m_c, m_p) for m_c in sorted(m.grid.m_c) for m_p in sorted(m.grid.m_p)]


def _ndecs_repeat(
    m: ExperimentManifest,
    c: ParamCircuit,
    o: PauliObservable,
    truth: float,
    repeat: int,
    cells: Sequence[Tuple[int, int]],
) -> List[Dict[str, Any]]:
    """Run one repeat over every grid cell.

    Configurations and patterns are drawn once at the largest cell size; every cell fits on a
    leading block of the same data. Sampling is sequential, so a leading block has the same
    distribution as a sample drawn at that size.
    """
    seed = derive_seed(m.seed, repeat)
    config_seed, pattern_seed, device_seed = (
        int(s) for s in np.random.SeedSequence(seed).generate_state(3)
    )
    max_c = max(m_c for m_c, _ in cells)
    max_p = max(m_p for _, m_p in cells)

    repeat_start = start = perf_counter()
    sample = sample_configs(c, o, 0, max_c, m.constraint_mode, config_seed, m.max_attempts)
    patterns = sample_patterns(c.n_layers, c.n_qubits, max_p, pattern_seed)
    device = DeviceEmulator(evolve(m.device, seed=device_seed))
    full = collect_data(c, o, sample, patterns, m.noise, device, threads=1)
    collect_seconds = perf_counter() - start

    rows = []
    for m_c, m_p in cells:
        start = perf_counter()
        n_c, n_p = min(m_c, len(sample)), min(m_p, len(patterns))
        configs = sample.configs[:n_c]
        problem = FitProblem(full.design[:n_p, :n_c], full.rhs[:n_p], patterns[:n_p])
        estimate = reconstruct(fit_coefficients(problem), configs, c, o, truth=truth)
        calls = (n_c + 1) * n_p
        share = collect_seconds * calls / full.device_calls
        rows.append(
            {
                'repeat': repeat,
                'repeat_seed': seed,
                'M_C': n_c,
                'M_P': n_p,
                'n': c.n_qubits,
                'N_or_D': _n_or_d(m.circuit),
                'value': estimate.value,
                'truth': truth,
                'eps_abs': estimate.eps_abs,
                'eps_rel': estimate.eps_rel,
                'device_calls': calls,
                'wall_seconds': share + perf_counter() - start,
            }
        )
    logger.info(f'NDE-CS repeat {repeat} done in {perf_counter() - repeat_start:.1f}s')
    return rows


def _run_ndecs_grid(
    m: ExperimentManifest,
    c: ParamCircuit,
    o: PauliObservable,
    truth: float,
    cells: Sequence[Tuple[int, int]],
    threads: int = None,
) -> ResultTable:
    table = ResultTable('ndecs-grid', NDECS_COLUMNS, manifest_hash(m), m.seed)
    results = parallel_map(
        lambda r: _ndecs_repeat(m, c, o, truth, r, cells), list(range(m.repeats)), threads
    )
    for rows in results:
        table.extend(rows)
    return table


def grid_summary(table: ResultTable) -> ResultTable:
    """Mean and spread of the errors per ``(M_C, M_P)`` cell, over repeats"""
    groups: Dict[Tuple[int, int], List[Dict]] = {}
    for row in table.rows:
        groups.setdefault((int(row['M_C']), int(row['M_P'])), []).append(row)

    columns = ['manifest_hash', 'seed', 'M_C', 'M_P', 'device_calls', 'repeats']
    columns += ['mean_eps_abs', 'mean_eps_rel', 'std_eps_rel']
    summary = ResultTable(f'{table.kind}-summary', columns, table.manifest_hash, table.seed)
    for (m_c, m_p), rows in sorted(groups.items()):
        eps_abs = [float(r['eps_abs']) for r in rows]
        eps_rel = [float(r['eps_rel']) for r in rows if r['eps_rel'] not in (None, '')]
        summary.append(
            M_C=m_c,
            M_P=m_p,
            device_calls=(m_c + 1) * m_p,
            repeats=len(rows),
            mean_eps_abs=float(np.mean(eps_abs)),
            mean_eps_rel=float(np.mean(eps_rel)) if eps_rel else None,
            std_eps_rel=float(np.std(eps_rel)) if eps_rel else None,
        )
    return summary


def cmd_ndecs_grid(
    m: ExperimentManifest, out_dir: Union[Path, str] = None, threads: int = None, plot=False
) -> ResultTable:
    """NDE-CS errors over the ``(M_C, M_P)`` grid, one row per cell and repeat"""
    c = build_circuit(m.circuit)
    o = build_observable(m.circuit, c.n_qubits)
    truth = compute_truth(c, o, m.truth)
    cells = _grid_cells(m)
    logger.info(
        f'NDE-CS grid: {c.n_qubits} qubits, {c.n_layers} layers, {len(cells)} cells, '
        f'{m.repeats} repeats; truth={truth:.6g}'
    )
    table = _run_ndecs_grid(m, c, o, truth, cells, threads)
    if out_dir is not None:
        out_dir = Path(out_dir)
        _write_inputs(m, c, out_dir)
        table.write(out_dir)
        summary = grid_summary(table)
        summary.write(out_dir)
        if plot:
            from .plotting import plot_ndecs_grid

            plot_ndecs_grid(summary, out_dir / 'ndecs-grid.svg')
    return table


# SMC convergence
# ---------------


def _fit_convergence(
    samples: Sequence[int], mean_eps: Sequence[float]
) -> Tuple[Optional[float], ...]:
    if len(samples) < 2 or not all(e > FIT_EPS_FLOOR for e in mean_eps):
        logger.warning('Cannot fit convergence: need two or more sizes with nonzero error')
        return None, None, None, None
    fit = linregress(np.log(samples), np.log(mean_eps))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue), float(fit.stderr)


def _paper_scale_prefactor(spec: CircuitSpec) -> float:
    spec = evolve(spec, family='trotter', n=PAPER_SCALE_QUBITS, steps=PAPER_SCALE_STEPS)
    return spmc_sample_complexity(build_circuit(spec), 1.0)


def cmd_smc_convergence(
    m: ExperimentManifest, out_dir: Union[Path, str] = None, threads: int = None, plot=False
) -> Tuple[ResultTable, ConvergenceFit]:
    """SPMC relative error at increasing sample counts, with a log-log fit of the mean error"""
    c = build_circuit(m.circuit)
    o = build_observable(m.circuit, c.n_qubits)
    truth = compute_truth(c, o, m.truth)
    columns = ['manifest_hash', 'seed', 'repeat', 'repeat_seed', 'M', 'n', 'N_or_D', 'value']
    columns += ['std_error', 'truth', 'eps_abs', 'eps_rel', 'l1_prefactor', 'wall_seconds']
    table = ResultTable('smc-convergence', columns, manifest_hash(m), m.seed)
    tasks = [(i, r) for i in range(len(m.grid.samples)) for r in range(m.repeats)]

    def run(task: Tuple[int, int]) -> Dict[str, Any]:
        i, r = task
        seed = derive_seed(m.seed, i, r)
        start = perf_counter()
        result = spmc_estimate(c, o, 0, m.grid.samples[i], seed, m.decomposition, threads=1)
        eps_abs, eps_rel = _relative(result.value, truth)
        return {
            'repeat': r,
            'repeat_seed': seed,
            'M': m.grid.samples[i],
            'n': c.n_qubits,
            'N_or_D': _n_or_d(m.circuit),
            'value': result.value,
            'std_error': result.std_error,
            'truth': truth,
            'eps_abs': eps_abs,
            'eps_rel': eps_rel,
            'l1_prefactor': result.l1_prefactor,
            'wall_seconds': perf_counter() - start,
        }

    table.extend(parallel_map(run, tasks, threads))

    # Relative errors when truth is nonzero; absolute errors otherwise
    metric = 'eps_rel' if truth != 0 else 'eps_abs'
    samples = sorted(set(m.grid.samples))
    mean_eps = [
        float(np.mean([row[metric] for row in table.rows if row['M'] == size]))
        for size in samples
    ]
    slope, intercept, r_value, slope_err = _fit_convergence(samples, mean_eps)
    extrapolated = None
    if slope is not None and slope < 0:
        with np.errstate(over='ignore'):
            extrapolated = float(np.exp((np.log(TARGET_EPS_REL) - intercept) / slope))
    prefactor = spmc_sample_complexity(c, 1.0)
    theoretical = spmc_sample_complexity(c, TARGET_EPS_REL * abs(truth)) if truth else float('inf')
    fit = ConvergenceFit(
        slope,
        intercept,
        r_value,
        slope_err,
        extrapolated,
        prefactor,
        theoretical,
        _paper_scale_prefactor(m.circuit),
    )
    logger.info(f'SMC convergence: {fit}')

    if out_dir is not None:
        out_dir = Path(out_dir)
        _write_inputs(m, c, out_dir)
        table.write(out_dir)
        json_serializer.dump(fit, out_dir / 'smc-convergence-fit')
        if plot:
            from .plotting import plot_convergence

            plot_convergence(samples, mean_eps, fit, out_dir / 'smc-convergence.svg')
    return table, fit


# NDE-CS vs. SMC cost
# -------------------


def cmd_scaling_compare(
    m: ExperimentManifest, out_dir: Union[Path, str] = None, threads: int = None, plot=False
) -> ResultTable:
    """Per ``(n, N)``, the cheapest NDE-CS grid cell reaching the target relative error vs. the
    SMC sample count from the closed-form cost. Unreached targets are flagged.
    """
    target = m.grid.target_eps_rel
    columns = ['manifest_hash', 'seed', 'n', 'N_or_D', 'truth', 'smc_samples', 'M_C', 'M_P']
    columns += ['ndecs_device_calls', 'ndecs_shots', 'ndecs_eps_rel', 'reached']
    table = ResultTable('scaling-compare', columns, manifest_hash(m), m.seed)
    cells = _grid_cells(m)

    for n in m.grid.qubits:
        for steps in m.grid.steps:
            spec = evolve(m.circuit, family='trotter', n=n, steps=steps)
            sub = evolve(m, circuit=spec, seed=derive_seed(m.seed, n, steps))
            c = build_circuit(spec)
            o = build_observable(spec, n)
            truth = compute_truth(c, o, m.truth)
            smc = spmc_sample_complexity(c, target * abs(truth)) if truth else float('inf')
            grid = grid_summary(_run_ndecs_grid(sub, c, o, truth, cells, threads))
            ranked = sorted(grid.rows, key=lambda r: (r['device_calls'], r['M_C'], r['M_P']))
            reached = [r for r in ranked if r['mean_eps_rel'] is not None]
            reached = [r for r in reached if r['mean_eps_rel'] <= target]
            best = reached[0] if reached else ranked[-1]
            if not reached:
                logger.warning(f'n={n}, N={steps}: target eps_rel={target} not reached in grid')
            m_c, m_p, eps = best['M_C'], best['M_P'], best['mean_eps_rel']
            calls = best['device_calls']
            shots = calls * m.device.n_shots if m.device.n_shots else None
            table.append(
                n=n,
                N_or_D=steps,
                truth=truth,
                smc_samples=smc,
                M_C=m_c,
                M_P=m_p,
                ndecs_device_calls=calls,
                ndecs_shots=shots,
                ndecs_eps_rel=eps,
                reached=bool(reached),
            )
            logger.info(f'n={n}, N={steps}: SMC {smc:.3g} samples, NDE-CS {calls} device calls')

    if out_dir is not None:
        out_dir = Path(out_dir)
        save_manifest(m, out_dir / 'manifest.json')
        table.write(out_dir)
        if plot:
            from .plotting import plot_scaling_compare

            plot_scaling_compare(table, out_dir / 'scaling-compare.svg')
    return table


# SPD path budgets
# ----------------


def cmd_spd_scaling(
    m: ExperimentManifest, out_dir: Union[Path, str] = None, threads: int = None, plot=False
) -> ResultTable:
    """SPD relative error on the structured family for every ``(D, m_max)``"""
    columns = ['manifest_hash', 'seed', 'n', 'N_or_D', 'm_max', 'value', 'truth', 'eps_abs']
    columns += ['eps_rel', 'max_paths', 'wall_seconds']
    table = ResultTable('spd-scaling', columns, manifest_hash(m), m.seed)
    if m.truth == 'analytic-identity' and m.circuit.theta != 0:
        logger.warning(f'Analytic identity truth used with theta={m.circuit.theta}')

    circuits = {}
    for D in m.grid.blocks:
        c = build_structured_family(D, m.circuit.theta, m.circuit.phi)
        o = build_observable(evolve(m.circuit, family='structured'), c.n_qubits)
        circuits[D] = (c.bind(), o, compute_truth(c, o, m.truth))
    tasks = [(D, m_max) for D in m.grid.blocks for m_max in sorted(m.grid.m_max)]

    def run(task: Tuple[int, int]) -> Dict[str, Any]:
        D, m_max = task
        bound, o, truth = circuits[D]
        start = perf_counter()
        path_set = spd_propagate(bound, o, TruncationPolicy(m_max))
        value = path_set.expectation(0)
        eps_abs, eps_rel = _relative(value, truth)
        return {
            'n': bound.n_qubits,
            'N_or_D': D,
            'm_max': m_max,
            'value': value,
            'truth': truth,
            'eps_abs': eps_abs,
            'eps_rel': eps_rel,
            'max_paths': max(path_set.history, default=len(path_set)),
            'wall_seconds': perf_counter() - start,
        }

    table.extend(parallel_map(run, tasks, threads))

    if out_dir is not None:
        out_dir = Path(out_dir)
        save_manifest(m, out_dir / 'manifest.json')
        table.write(out_dir)
        threshold_table(table, m.grid.thresholds).write(out_dir)
        if plot:
            from .plotting import plot_spd_scaling

            plot_spd_scaling(table, out_dir / 'spd-scaling.svg')
    return table


def threshold_table(table: ResultTable, thresholds: Sequence[float]) -> ResultTable:
    """Smallest ``m_max`` reaching each relative error threshold, per qubit count, plus the slope
    of a linear fit of ``log2(m_max)`` against ``n`` for each threshold
    """
    columns = ['manifest_hash', 'seed', 'threshold', 'n', 'N_or_D', 'm_max', 'log2_slope']
    out = ResultTable('spd-thresholds', columns, table.manifest_hash, table.seed)
    by_n: Dict[Tuple[int, int], List[Tuple[int, float]]] = {}
    for row in table.rows:
        eps = row['eps_rel'] if row['eps_rel'] is not None else row['eps_abs']
        by_n.setdefault((int(row['n']), int(row['N_or_D'])), []).append((int(row['m_max']), eps))

    for threshold in thresholds:
        points = []
        for (n, D), values in sorted(by_n.items()):
            reached = [m_max for m_max, eps in sorted(values) if eps <= threshold]
            points.append((n, D, reached[0] if reached else None))
        fit_points = [(n, np.log2(m_max)) for n, _, m_max in points if m_max is not None]
        slope = None
        if len({n for n, _ in fit_points}) >= 2:
            slope = float(linregress(*zip(*fit_points)).slope)
        for n, D, m_max in points:
            out.append(threshold=threshold, n=n, N_or_D=D, m_max=m_max, log2_slope=slope)
    return out


# Verification suite
# ------------------

CheckFunc = Callable[[], Tuple[bool, str]]


def _check_rotation_decompositions() -> Tuple[bool, str]:
    worst_ptm, worst_l1 = 0.0, 0.0
    z_axis = PauliString.from_label('Z')
    for label in ['Z', 'XZ']:
        axis = PauliString.from_label(label)
        for theta in np.linspace(0, 2 * pi, 64, endpoint=False):
            d = optimal_decomposition(theta)
            expected = channel_ptm(PauliRotation(axis, theta)).matrix
            worst_ptm = max(worst_ptm, np.abs(decomposition_ptm(axis, d).matrix - expected).max())
            worst_l1 = max(worst_l1, abs(d.l1 - abs(np.sin(theta)) - abs(np.cos(theta))))
    for theta in np.linspace(0, pi / 4, 16):
        d = bennink_decomposition(theta)
        expected = channel_ptm(PauliRotation(z_axis, theta)).matrix
        worst_ptm = max(worst_ptm, np.abs(decomposition_ptm(z_axis, d).matrix - expected).max())
    passed = worst_ptm <= 1e-12 and worst_l1 <= 1e-14
    return passed, f'max PTM deviation {worst_ptm:.2e}, max l1 deviation {worst_l1:.2e}'


def _check_noisy_decompositions() -> Tuple[bool, str]:
    axis = PauliString.from_label('Z')
    worst_ptm, worst_l1, convex_ok = 0.0, 0.0, True
    for theta in np.linspace(0, 2 * pi, 16, endpoint=False):
        for gamma in [0.0, 0.02, 0.1, 0.25, 0.4, 0.5]:
            d = noisy_decomposition(theta, gamma)
            noisy_rotation = channel_ptm(axis_noise(axis, gamma)).matrix @ (
                channel_ptm(PauliRotation(axis, theta)).matrix
            )
            deviation = np.abs(decomposition_ptm(axis, d).matrix - noisy_rotation).max()
            worst_ptm = max(worst_ptm, deviation)
            l1 = max(1.0, (1 - 2 * gamma) * (abs(np.sin(theta)) + abs(np.cos(theta))))
            worst_l1 = max(worst_l1, abs(d.l1 - l1))
            if gamma > critical_noise(theta) and not d.is_convex:
                convex_ok = False
    passed = worst_ptm <= 1e-12 and worst_l1 <= 1e-12 and convex_ok
    return passed, f'max PTM deviation {worst_ptm:.2e}, max l1 deviation {worst_l1:.2e}'


def _check_two_rotation_fixtures() -> Tuple[bool, str]:
    x, z = (PauliObservable.from_pauli(label) for label in ['X', 'Z'])
    device = DeviceEmulatorConfig.exact()
    worst = 0.0
    for theta, phi in [(0.3, 0.7), (1.1, -0.4), (2.5, 1.9)]:
        for gamma_1, gamma_2 in [(0.0, 0.0), (0.05, 0.1), (0.2, 0.35)]:
            for with_insertions in [False, True]:
                c = fig2_circuit(theta, phi, gamma_1, gamma_2, with_insertions).bind()
                expected = fig2_noisy_expectations(theta, phi, gamma_1, gamma_2, with_insertions)
                for name, o in [('X', x), ('Z', z)]:
                    value = noisy_expectation(c, o, 0, device)
                    worst = max(worst, abs(value - expected[name]))
    return worst <= 1e-12, f'max deviation {worst:.2e}'


def _check_exactness_oracle() -> Tuple[bool, str]:
    o = PauliObservable.from_paulis(1, [('X', 1.0), ('Z', 1.0)])
    c = fig2_circuit(0.3, 0.7, 0.05, 0.08)
    exact = theorem1_oracle(c, o)
    guard = not theorem1_oracle(c, o, with_insertions=False)
    _, residual, error = fig2_counterexample(0.3, 0.7, 0.05, 0.08)
    counterexample = residual <= 1e-10 and error > 1e-6
    passed = exact and guard and counterexample
    detail = (
        f'with insertions: {"pass" if exact else "fail"}; without insertions fails as expected: '
        f'{guard}; counterexample residual {residual:.2e}, noiseless error {error:.2e}'
    )
    return passed, detail


def _check_clifford_engines() -> Tuple[bool, str]:
    rng = np.random.default_rng(1)
    engine = StabilizerEngine()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        c = random_clifford_circuit(n, int(rng.integers(1, 61)), rng)
        o = PauliObservable.from_pauli(_random_label(n, rng))
        initial = int(rng.integers(2**n))
        dense = state_expectation(run_statevector(c, initial), o)
        worst = max(worst, abs(engine.expectation(c, o, initial) - dense))
    return worst <= 1e-10, f'200 circuits of up to 60 gates, max deviation {worst:.2e}'


def _check_spd_engine() -> Tuple[bool, str]:
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 11))
        c = random_rotation_circuit(n, int(rng.integers(1, 30)), rng)
        o = PauliObservable.from_pauli(_random_label(n, rng))
        dense = state_expectation(run_statevector(c, 0), o)
        worst = max(worst, abs(spd_expectation(c, o, 0) - dense))
    return worst <= 1e-10, f'50 circuits, max deviation {worst:.2e}'


def _check_noisy_heisenberg() -> Tuple[bool, str]:
    rng = np.random.default_rng(3)
    device = DeviceEmulatorConfig(n_shots=None, trajectories='density')
    profile = HardwareNoiseProfile(0.01, 0.02, 0.03, 0.04)
    worst = 0.0
    for _ in range(30):
        n = int(rng.integers(2, 5))
        c = attach_profile(random_clifford_circuit(n, int(rng.integers(1, 20)), rng), profile)
        o = PauliObservable.from_pauli(_random_label(n, rng))
        dense = noisy_expectation(c, o, 0, device)
        worst = max(worst, abs(heisenberg_noisy_expectation(c, o, 0) - dense))
    return worst <= 1e-10, f'30 circuits, max deviation {worst:.2e}'


def _random_label(n: int, rng: np.random.Generator) -> str:
    while True:
        label = ''.join(rng.choice(list('IXYZ'), size=n))
        if set(label) != {'I'}:
            return label


def _check_structured_paths(max_blocks: int = 12) -> Tuple[bool, str]:
    for D in range(1, max_blocks + 1):
        c = build_structured_family(D, 0.0, pi / 4)
        o = build_observable(CircuitSpec(family='structured'), c.n_qubits)
        tail = ParamCircuit(c.n_qubits, c.layers[D:], c.suffix).bind()
        paths = spd_propagate(tail, o).paths
        magnitudes = np.abs(np.array(list(paths.values())))
        if len(paths) != 2**D or np.abs(magnitudes - 2 ** (-D / 2)).max() > 1e-12:
            return False, f'D={D}: {len(paths)} live paths'
        value = spd_expectation(c.bind(), o, 0, TruncationPolicy(2**D))
        if abs(value - 1.0) > 1e-10:
            return False, f'D={D}: value {value} with m_max=2^D'
    return True, f'D=1..{max_blocks}: 2^D live paths of magnitude 2^(-D/2); exact at m_max=2^D'


def _check_spmc() -> Tuple[bool, str]:
    c = build_trotter_ising(4, 1)
    o = PauliObservable.magnetization(4)
    truth = compute_truth(c, o)
    result = spmc_estimate(c, o, M=10**5, seed=0)
    within = abs(result.value - truth) <= 4 * result.std_error

    # Sample variance of a single-Pauli estimate against its exact enumerated value
    c = build_trotter_ising(3, 1)
    z0 = PauliObservable.from_pauli(PauliString.from_sparse(3, {0: 'Z'}))
    z0_result = spmc_estimate(c, z0, M=10**5, seed=1)
    expected = spmc_variance(c, z0)
    ratio = z0_result.variance_prefactor / expected
    detail = (
        f'estimate {result.value:.5f} +/- {result.std_error:.5f}, truth {truth:.5f}; '
        f'Z0 variance prefactor {z0_result.variance_prefactor:.3f}, exact {expected:.3f}, '
        f'l1^2 {z0_result.l1_prefactor**2:.3f}'
    )
    return within and 0.8 <= ratio <= 1.2, detail


def _check_ndecs_noiseless() -> Tuple[bool, str]:
    c = fig2_circuit(0.3, 0.7)
    o = PauliObservable.from_paulis(1, [('X', 1.0), ('Z', 1.0)])
    configs = all_configurations(c.n_layers)
    patterns = sample_patterns(c.n_layers, c.n_qubits, 4, seed=0)
    problem = collect_data(c, o, configs, patterns, device=DeviceEmulatorConfig.exact())
    truth = compute_truth(c, o)
    estimate = reconstruct(fit_coefficients(problem), configs, c, o, truth=truth)
    return estimate.eps_abs <= 1e-8, f'noiseless reconstruction error {estimate.eps_abs:.2e}'


VERIFY_CHECKS: Dict[str, CheckFunc] = {
    'rotation-decompositions': _check_rotation_decompositions,
    'noisy-decompositions': _check_noisy_decompositions,
    'two-rotation-fixtures': _check_two_rotation_fixtures,
    'exactness-oracle': _check_exactness_oracle,
    'clifford-engines': _check_clifford_engines,
    'spd-engine': _check_spd_engine,
    'noisy-heisenberg': _check_noisy_heisenberg,
    'structured-paths': _check_structured_paths,
    'spmc-unbiased': _check_spmc,
    'ndecs-noiseless': _check_ndecs_noiseless,
}


def _run_check(name: str, check: CheckFunc) -> CheckResult:
    start = perf_counter()
    try:
        passed, detail = check()
    except Exception as e:
        logger.error(f'Check {name} raised {type(e).__name__}: {e}')
        logger.debug(e, exc_info=True)
        passed, detail = False, f'{type(e).__name__}: {e}'
    seconds = perf_counter() - start
    if passed:
        logger.info(f'{name}: pass ({seconds:.1f}s)')
    else:
        logger.error(f'{name}: FAIL: {detail}')
    return CheckResult(name, bool(passed), detail, seconds)


def cmd_verify(
    m: ExperimentManifest = None,
    out_dir: Union[Path, str] = None,
    threads: int = None,
    plot=False,
    checks: Sequence[str] = None,
    report_format: str = 'json',
) -> VerifyReport:
    """Run the verification suite; a failing or crashing check is recorded, never raised.

    Args:
        m: Unused; accepted so every command has the same signature
        out_dir: Directory for ``verify-report.json`` (or ``.yaml``)
        threads: Worker count; checks run in parallel
        checks: Names of the checks to run (default: all of :py:data:`VERIFY_CHECKS`)
        report_format: ``json`` or ``yaml``
    """
    names = list(checks or VERIFY_CHECKS)
    unknown = [name for name in names if name not in VERIFY_CHECKS]
    if unknown:
        raise ValueError(f'Invalid checks: {unknown}. Choose from: {list(VERIFY_CHECKS)}')
    results = parallel_map(lambda name: _run_check(name, VERIFY_CHECKS[name]), names, threads)
    report = VerifyReport.from_checks(results)
    logger.info(f'Verify: {len(results) - len(report.failed)}/{len(results)} checks passed')

    if out_dir is not None:
        serializer = init_serializer(report_format)
        path = serializer.dump(report, Path(out_dir) / 'verify-report')
        logger.info(f'Wrote report to {path}')
    return report


COMMANDS: Dict[str, Callable] = {
    'ndecs-grid': cmd_ndecs_grid,
    'smc-convergence': cmd_smc_convergence,
    'scaling-compare': cmd_scaling_compare,
    'spd-scaling': cmd_spd_scaling,
    'verify': cmd_verify,
}
