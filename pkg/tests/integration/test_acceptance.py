"""Full-size acceptance runs. These take minutes each; deselect with ``pytest -m 'not slow'``"""
from math import cos, pi, sin, sqrt

import pytest
from timeout_decorator import timeout

from cliffsim import (
    CircuitSpec,
    ExperimentManifest,
    GridSpec,
    PauliObservable,
    PauliString,
    build_trotter_ising,
    spmc_estimate,
    spmc_variance,
)
from cliffsim.harness import (
    VERIFY_CHECKS,
    cmd_ndecs_grid,
    cmd_smc_convergence,
    cmd_spd_scaling,
    cmd_verify,
    compute_truth,
    grid_summary,
    threshold_table,
)

pytestmark = pytest.mark.slow

# Device-call budget for the desk-scale grid, (M_C + 1) * M_P
MAX_DEVICE_CALLS = 2 * 10**4


@timeout(300)
def test_spmc_unbiased_at_one_million_samples():
    c = build_trotter_ising(4, 1)
    o = PauliObservable.magnetization(4)
    truth = compute_truth(c, o)
    result = spmc_estimate(c, o, M=10**6, seed=0)

    assert abs(result.value - truth) <= 3 * result.std_error
    expected_l1 = 1.0
    for layer in c.layers:
        expected_l1 *= abs(sin(layer.angle)) + abs(cos(layer.angle))
    assert result.l1_prefactor == pytest.approx(expected_l1)


@timeout(300)
def test_spmc_variance_prefactor__single_pauli():
    c = build_trotter_ising(3, 1)
    o = PauliObservable.from_pauli(PauliString.from_sparse(3, {0: 'Z'}))
    result = spmc_estimate(c, o, M=10**6, seed=0)
    expected = spmc_variance(c, o)
    assert expected <= result.l1_prefactor**2
    assert result.variance_prefactor == pytest.approx(expected, rel=0.2)


@timeout(1800)
def test_ndecs_grid_at_desk_scale():
    """8 qubits, 3 Trotter steps, default noise and 2**14 shots, 20 seeds per cell"""
    m = ExperimentManifest(
        circuit=CircuitSpec(n=8, steps=3),
        grid=GridSpec(m_c=[25, 50, 100, 200], m_p=[5, 10, 20, 40, 80]),
        repeats=20,
        seed=0,
    )
    assert m.device.n_shots == 2**14
    summary = grid_summary(cmd_ndecs_grid(m))
    cells = {(row['M_C'], row['M_P']): row for row in summary.rows}

    affordable = [row for row in summary.rows if row['device_calls'] <= MAX_DEVICE_CALLS]
    assert min(row['mean_eps_rel'] for row in affordable) < 0.05

    # Non-increasing along the diagonal, up to the standard error of each mean
    diagonal = [cells[cell] for cell in [(25, 5), (50, 10), (100, 20), (200, 40)]]
    for a, b in zip(diagonal, diagonal[1:]):
        slack = 2 * sqrt((a['std_eps_rel'] ** 2 + b['std_eps_rel'] ** 2) / m.repeats)
        assert b['mean_eps_rel'] <= a['mean_eps_rel'] + slack, (a, b)


@timeout(600)
def test_structured_ndecs_single_cell():
    m = ExperimentManifest(
        circuit=CircuitSpec(family='structured', blocks=6, theta=0.0, phi=pi / 4),
        grid=GridSpec(m_c=[1], m_p=[1]),
        constraint_mode='mirror',
        truth='analytic-identity',
        repeats=20,
        seed=0,
    )
    summary = grid_summary(cmd_ndecs_grid(m))
    assert len(summary.rows) == 1
    assert summary.rows[0]['mean_eps_rel'] < 0.05


@timeout(600)
def test_smc_convergence_slope(tmp_path):
    m = ExperimentManifest(
        kind='smc-convergence',
        circuit=CircuitSpec(n=6, steps=2),
        grid=GridSpec(samples=[10**3, 10**4, 10**5]),
        repeats=20,
        seed=0,
    )
    _, fit = cmd_smc_convergence(m, tmp_path)
    assert fit.slope == pytest.approx(-0.5, abs=0.1)
    assert fit.paper_scale_prefactor > fit.l1_prefactor_squared > 1
    assert (tmp_path / 'smc-convergence-fit.json').exists()


@timeout(900)
def test_structured_family_path_budget():
    passed, detail = VERIFY_CHECKS['structured-paths']()
    assert passed, detail

    m = ExperimentManifest(
        kind='spd-scaling',
        circuit=CircuitSpec(family='structured', theta=0.0),
        truth='analytic-identity',
        grid=GridSpec(blocks=[1, 2, 3, 4, 5, 6], thresholds=[0.1]),
    )
    table = cmd_spd_scaling(m)
    for row in table.rows:
        if row['m_max'] >= 2 ** row['N_or_D']:
            assert row['eps_abs'] == pytest.approx(0.0, abs=1e-10)

    thresholds = threshold_table(table, m.grid.thresholds)
    assert thresholds.rows[0]['log2_slope'] > 0


@timeout(600)
def test_verify_suite(tmp_path):
    report = cmd_verify(out_dir=tmp_path)
    assert report.passed, report.failed
    assert (tmp_path / 'verify-report.json').exists()
