import json
from math import pi
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from attr import evolve

from cliffsim import (
    CircuitSpec,
    DeviceEmulatorConfig,
    ExperimentManifest,
    GridSpec,
    HardwareNoiseProfile,
    PauliObservable,
    PauliString,
    json_serializer,
    spmc_sample_complexity,
    yaml_serializer,
)
from cliffsim.harness import (
    VERIFY_CHECKS,
    CheckResult,
    ResultTable,
    VerifyReport,
    _fit_convergence,
    build_circuit,
    build_observable,
    cmd_ndecs_grid,
    cmd_scaling_compare,
    cmd_smc_convergence,
    cmd_spd_scaling,
    cmd_verify,
    compute_truth,
    grid_summary,
    load_manifest,
    manifest_hash,
    save_manifest,
    threshold_table,
)
from tests.conftest import dense_expectation

MANIFEST_DIR = Path(__file__).parents[2] / 'manifests'
SMALL_TROTTER = CircuitSpec(n=3, steps=1)
SMALL_GRID = GridSpec(m_c=[2, 4], m_p=[2, 3], samples=[200, 2000], blocks=[1, 2], m_max=[1, 2, 4])


@pytest.fixture
def small_manifest():
    return ExperimentManifest(
        circuit=SMALL_TROTTER,
        noise=HardwareNoiseProfile(0.01, 0.01, 0.01, 0.01),
        device=DeviceEmulatorConfig(n_shots=1000),
        grid=SMALL_GRID,
        repeats=2,
        seed=7,
    )


def test_result_table__write_read(tmp_path):
    table = ResultTable('spd-scaling', ['manifest_hash', 'seed', 'n', 'value'], 'abc123', 5)
    table.append(n=3, value=0.25)
    table.append(n=4, value=None)
    path = table.write(tmp_path)
    assert path == tmp_path / 'spd-scaling.csv'
    assert path.read_text().splitlines()[0] == (
        '# cliffsim-results v1 kind=spd-scaling manifest=abc123 seed=5'
    )

    loaded = ResultTable.read(path)
    assert (loaded.kind, loaded.manifest_hash, loaded.seed) == ('spd-scaling', 'abc123', 5)
    assert loaded.columns == table.columns
    assert loaded.column('value') == ['0.25', '']
    assert len(loaded) == 2


def test_result_table__unknown_column():
    table = ResultTable('spd-scaling', ['manifest_hash', 'seed', 'n'])
    with pytest.raises(ValueError):
        table.append(n=3, m=4)


def test_result_table__bad_header(tmp_path):
    path = tmp_path / 'table.csv'
    path.write_text('n,value\n3,0.5\n')
    with pytest.raises(ValueError):
        ResultTable.read(path)


def test_load_manifest__defaults():
    m = load_manifest()
    assert m == ExperimentManifest()
    assert load_manifest(seed=3).seed == 3
    assert load_manifest(seed=None) == m


@pytest.mark.parametrize('suffix', ['.toml', '.json'])
def test_save_load_manifest(tmp_path, small_manifest, suffix):
    path = save_manifest(small_manifest, tmp_path / f'manifest{suffix}')
    assert load_manifest(path) == small_manifest


def test_save_load_manifest__toml_exact_device(tmp_path):
    m = ExperimentManifest(device=DeviceEmulatorConfig.exact())
    path = save_manifest(m, tmp_path / 'manifest.toml')
    assert 'n_shots = 0' in path.read_text()
    assert load_manifest(path).device.n_shots is None


def test_load_manifest__yaml(tmp_path, small_manifest):
    path = tmp_path / 'manifest.yml'
    path.write_text(yaml_serializer.dumps(small_manifest))
    assert load_manifest(path, seed=1) == evolve(small_manifest, seed=1)


def test_load_manifest__invalid(tmp_path):
    path = tmp_path / 'manifest.toml'
    path.write_text('truth = "oracle"\n')
    with pytest.raises(ValueError):
        load_manifest(path)
    with pytest.raises(OSError):
        load_manifest(tmp_path / 'missing.toml')


@pytest.mark.parametrize('path', sorted(MANIFEST_DIR.glob('*.toml')), ids=lambda p: p.stem)
def test_load_manifest__shipped(path):
    m = load_manifest(path)
    assert m.kind.replace('-', '_') in path.stem or m.circuit.family == 'structured'
    c = build_circuit(m.circuit)
    assert build_observable(m.circuit, c.n_qubits).n_qubits == c.n_qubits


def test_manifest_hash(tmp_path, small_manifest):
    digest = manifest_hash(small_manifest)
    assert len(digest) == 16
    int(digest, 16)
    loaded = load_manifest(save_manifest(small_manifest, tmp_path / 'manifest.json'))
    assert manifest_hash(loaded) == digest
    assert manifest_hash(ExperimentManifest(seed=8)) != manifest_hash(ExperimentManifest(seed=9))


def test_build_circuit():
    trotter = build_circuit(CircuitSpec(n=4, steps=2))
    assert (trotter.n_qubits, trotter.n_layers) == (4, 24)
    assert all(axis.weight == 1 and axis.letter(axis.support[0]) == 'Z' for axis in trotter.axes)
    assert build_circuit(CircuitSpec(n=4, steps=2, native=False)).n_layers == 24

    structured = build_circuit(CircuitSpec(family='structured', blocks=3))
    assert (structured.n_qubits, structured.n_layers) == (7, 6)


def test_build_observable():
    assert build_observable(CircuitSpec(), 4) == PauliObservable.magnetization(4)
    z0 = PauliObservable.from_pauli(PauliString.from_sparse(5, {0: 'Z'}))
    assert build_observable(CircuitSpec(family='structured'), 5) == z0
    assert build_observable(CircuitSpec(observable='z0'), 5) == z0


def test_compute_truth__sources_agree_on_identity_circuit():
    spec = CircuitSpec(family='structured', blocks=2, theta=0.0, phi=0.6)
    c = build_circuit(spec)
    o = build_observable(spec, c.n_qubits)
    for source in ['dense', 'analytic-identity', 'untruncated-spd']:
        assert compute_truth(c, o, source) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        compute_truth(c, o, 'oracle')


def test_compute_truth__trotter():
    c = build_circuit(SMALL_TROTTER)
    o = build_observable(SMALL_TROTTER, 3)
    expected = dense_expectation(c.bind(), o)
    assert compute_truth(c, o) == pytest.approx(expected)
    assert compute_truth(c, o, 'untruncated-spd') == pytest.approx(expected, abs=1e-10)


def test_grid_summary():
    table = ResultTable('ndecs-grid', ['manifest_hash', 'seed', 'M_C', 'M_P', 'eps_abs', 'eps_rel'])
    for eps in [0.1, 0.3]:
        table.append(M_C=4, M_P=2, eps_abs=eps, eps_rel=2 * eps)
    table.append(M_C=2, M_P=2, eps_abs=0.5, eps_rel=None)
    summary = grid_summary(table)
    assert summary.kind == 'ndecs-grid-summary'
    first, second = summary.rows
    assert (first['M_C'], first['mean_eps_abs'], first['mean_eps_rel']) == (2, 0.5, None)
    assert second['device_calls'] == 10
    assert second['repeats'] == 2
    assert second['mean_eps_rel'] == pytest.approx(0.4)
    assert second['std_eps_rel'] == pytest.approx(0.2)


def test_threshold_table():
    columns = ['manifest_hash', 'seed', 'n', 'N_or_D', 'm_max', 'eps_abs', 'eps_rel']
    table = ResultTable('spd-scaling', columns)
    for n, D, errors in [(3, 1, [0.5, 0.0, 0.0]), (5, 2, [0.9, 0.5, 0.0])]:
        for m_max, eps in zip([1, 2, 4], errors):
            table.append(n=n, N_or_D=D, m_max=m_max, eps_abs=eps, eps_rel=eps)

    out = threshold_table(table, [0.6, 0.1])
    rows = {(r['threshold'], r['n']): r['m_max'] for r in out.rows}
    assert rows == {(0.6, 3): 1, (0.6, 5): 2, (0.1, 3): 2, (0.1, 5): 4}
    assert all(r['log2_slope'] == pytest.approx(0.5) for r in out.rows)


def test_cmd_ndecs_grid(tmp_path, small_manifest):
    table = cmd_ndecs_grid(small_manifest, tmp_path)
    assert len(table) == 2 * 4
    assert set(table.column('manifest_hash')) == {manifest_hash(small_manifest)}
    for row in table.rows:
        assert row['device_calls'] == (row['M_C'] + 1) * row['M_P']
        assert row['eps_abs'] == pytest.approx(abs(row['value'] - row['truth']))
    for name in ['ndecs-grid.csv', 'ndecs-grid-summary.csv', 'manifest.json', 'target.circuit']:
        assert (tmp_path / name).is_file()

    repeat = cmd_ndecs_grid(small_manifest)
    assert repeat.column('value') == table.column('value')


def test_cmd_smc_convergence(tmp_path, small_manifest):
    m = small_manifest
    table, fit = cmd_smc_convergence(m, tmp_path)
    assert len(table) == 2 * 2
    assert sorted(set(table.column('M'))) == [200, 2000]
    c = build_circuit(m.circuit)
    assert fit.l1_prefactor_squared == pytest.approx(spmc_sample_complexity(c, 1.0))
    assert fit.paper_scale_prefactor > fit.l1_prefactor_squared
    saved = json.loads((tmp_path / 'smc-convergence-fit.json').read_text())
    assert saved['l1_prefactor_squared'] == pytest.approx(fit.l1_prefactor_squared)


def test_cmd_smc_convergence__clifford_circuit():
    """A circuit of Clifford angles has zero error, so there is no convergence fit"""
    m = ExperimentManifest(circuit=CircuitSpec(n=3, steps=1, T=0.0), grid=SMALL_GRID, repeats=2)
    table, fit = cmd_smc_convergence(m)
    assert all(eps == pytest.approx(0.0, abs=1e-12) for eps in table.column('eps_abs'))
    assert fit.slope is None
    assert fit.l1_prefactor_squared == pytest.approx(1.0)


def test_fit_convergence__residue_is_not_fitted():
    assert _fit_convergence([100, 1000], [3e-15, 1e-16]) == (None, None, None, None)
    slope, intercept, r_value, _ = _fit_convergence([100, 10000], [0.1, 0.01])
    assert slope == pytest.approx(-0.5)
    assert intercept == pytest.approx(np.log(0.1) + 0.5 * np.log(100))
    assert r_value == pytest.approx(-1.0)


def test_cmd_spd_scaling(tmp_path):
    m = ExperimentManifest(
        kind='spd-scaling',
        circuit=CircuitSpec(family='structured', theta=0.0, phi=pi / 4),
        grid=SMALL_GRID,
        truth='analytic-identity',
    )
    table = cmd_spd_scaling(m, tmp_path)
    assert len(table) == 2 * 3
    for row in table.rows:
        assert row['max_paths'] <= row['m_max']
        if row['m_max'] >= 2 ** row['N_or_D']:
            assert row['eps_abs'] == pytest.approx(0.0, abs=1e-10)
    assert (tmp_path / 'spd-scaling.csv').is_file()
    thresholds = ResultTable.read(tmp_path / 'spd-thresholds.csv')
    assert len(thresholds) == len(m.grid.thresholds) * 2


def test_plots(tmp_path, small_manifest):
    pytest.importorskip('matplotlib')
    cmd_ndecs_grid(small_manifest, tmp_path, plot=True)
    cmd_smc_convergence(evolve(small_manifest, kind='smc-convergence'), tmp_path, plot=True)
    m = ExperimentManifest(
        kind='spd-scaling',
        circuit=CircuitSpec(family='structured', theta=0.0, phi=pi / 4),
        grid=SMALL_GRID,
        truth='analytic-identity',
    )
    cmd_spd_scaling(m, tmp_path, plot=True)
    for name in ['ndecs-grid', 'smc-convergence', 'spd-scaling']:
        assert (tmp_path / f'{name}.svg').read_text().lstrip().startswith('<?xml')


def test_cmd_scaling_compare():
    m = ExperimentManifest(
        kind='scaling-compare',
        circuit=SMALL_TROTTER,
        device=DeviceEmulatorConfig(n_shots=500),
        grid=GridSpec(m_c=[2, 4], m_p=[2], qubits=[3], steps=[1], target_eps_rel=0.5),
        repeats=1,
    )
    table = cmd_scaling_compare(m)
    assert len(table) == 1
    row = table.rows[0]
    assert row['ndecs_device_calls'] == (row['M_C'] + 1) * row['M_P']
    assert row['ndecs_shots'] == row['ndecs_device_calls'] * 500
    assert row['smc_samples'] > 0
    assert isinstance(row['reached'], bool)


def test_cmd_verify(tmp_path):
    checks = ['rotation-decompositions', 'two-rotation-fixtures', 'ndecs-noiseless']
    report = cmd_verify(out_dir=tmp_path, checks=checks)
    assert report.passed
    assert [check.name for check in report.checks] == checks
    saved = json.loads((tmp_path / 'verify-report.json').read_text())
    assert saved['passed'] is True
    assert len(saved['checks']) == 3


def test_verify_report__passed_is_always_written():
    report = VerifyReport.from_checks([CheckResult('ok', True)])
    saved = json.loads(json_serializer.dumps(report))
    assert saved['passed'] is True
    assert saved['checks'] == [{'name': 'ok', 'passed': True, 'detail': '', 'seconds': 0.0}]


def test_clifford_engines_check():
    passed, detail = VERIFY_CHECKS['clifford-engines']()
    assert passed, detail
    assert detail.startswith('200 circuits of up to 60 gates')


def test_cmd_verify__crashing_check_is_recorded():
    def boom():
        raise RuntimeError('boom')

    with patch.dict(VERIFY_CHECKS, {'boom': boom, 'ok': lambda: (True, '')}):
        report = cmd_verify(checks=['boom', 'ok'])
    assert not report.passed
    assert report.failed == ['boom']
    assert 'RuntimeError' in report.checks[0].detail


def test_cmd_verify__unknown_check():
    with pytest.raises(ValueError):
        cmd_verify(checks=['everything'])


def test_cmd_verify__yaml_report(tmp_path):
    cmd_verify(out_dir=tmp_path, checks=['rotation-decompositions'], report_format='yaml')
    assert (tmp_path / 'verify-report.yaml').is_file()
    assert 'passed: true' in (tmp_path / 'verify-report.yaml').read_text()
