import json
from unittest.mock import patch

import pytest

from cliffsim import ExperimentManifest, __version__
from cliffsim.cli import apply_paper_scale, main
from cliffsim.harness import VERIFY_CHECKS, ResultTable


def test_verify(tmp_path):
    argv = ['verify', '--checks', 'rotation-decompositions', '--out', str(tmp_path)]
    assert main(argv) == 0
    report = json.loads((tmp_path / 'verify' / 'verify-report.json').read_text())
    assert report['passed'] is True
    assert [check['name'] for check in report['checks']] == ['rotation-decompositions']


def test_verify__failed_check(tmp_path):
    with patch.dict(VERIFY_CHECKS, {'always-fails': lambda: (False, 'nope')}):
        assert main(['verify', '--checks', 'always-fails', '--out', str(tmp_path)]) == 1


def test_verify__unknown_check(tmp_path):
    with pytest.raises(SystemExit):
        main(['verify', '--checks', 'everything', '--out', str(tmp_path)])


def test_spd_scaling__with_manifest(tmp_path):
    manifest = tmp_path / 'spd.toml'
    manifest.write_text(
        'kind = "spd-scaling"\n'
        'truth = "analytic-identity"\n'
        '[circuit]\nfamily = "structured"\ntheta = 0.0\n'
        '[grid]\nblocks = [1, 2]\nm_max = [1, 4]\n'
    )
    argv = ['spd-scaling', '--manifest', str(manifest), '--out', str(tmp_path), '--seed', '5']
    assert main(argv) == 0
    table = ResultTable.read(tmp_path / 'spd-scaling' / 'spd-scaling.csv')
    assert table.seed == 5
    assert len(table) == 4


def test_missing_manifest(tmp_path):
    argv = ['spd-scaling', '--manifest', str(tmp_path / 'missing.toml'), '--out', str(tmp_path)]
    assert main(argv) == 2


def test_invalid_manifest(tmp_path):
    manifest = tmp_path / 'bad.toml'
    manifest.write_text('[grid]\nm_max = []\n')
    assert main(['spd-scaling', '--manifest', str(manifest), '--out', str(tmp_path)]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(['--version'])
    assert e.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_apply_paper_scale():
    m = apply_paper_scale(ExperimentManifest(seed=4))
    assert (m.circuit.family, m.circuit.n, m.circuit.steps) == ('trotter', 16, 5)
    assert (m.grid.m_c, m.grid.m_p) == ([720], [120])
    assert m.seed == 4
