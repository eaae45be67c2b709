"""SVG figures for harness results: line plots and one heatmap. CSV tables stay the canonical
output; these are optional and need the ``plot`` extra (matplotlib).

.. automodsumm:: cliffsim.plotting
   :functions-only:
   :nosignatures:
"""
from logging import getLogger
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Sequence, Tuple, Union

import numpy as np

from ._utils import get_placeholder_class

if TYPE_CHECKING:
    from .harness import ConvergenceFit, ResultTable

try:
    from matplotlib.figure import Figure
except ImportError as e:
    Figure = get_placeholder_class(e)  # type: ignore

__all__ = ['plot_convergence', 'plot_ndecs_grid', 'plot_scaling_compare', 'plot_spd_scaling']

PathLike = Union[Path, str]
logger = getLogger(__name__)


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    fig.savefig(path, format='svg', bbox_inches='tight')
    logger.info(f'Wrote plot to {path}')
    return path


def _series(rows: Sequence[Dict], key: str, x: str, y: str) -> Dict[object, List[Tuple]]:
    series: Dict[object, List[Tuple]] = {}
    for row in rows:
        if row.get(y) not in (None, ''):
            series.setdefault(row[key], []).append((float(row[x]), float(row[y])))
    return {label: sorted(points) for label, points in sorted(series.items())}


def plot_ndecs_grid(summary: 'ResultTable', path: PathLike) -> Path:
    """Heatmap of mean relative error over the ``(M_C, M_P)`` grid"""
    m_c = sorted({int(r['M_C']) for r in summary.rows})
    m_p = sorted({int(r['M_P']) for r in summary.rows})
    values = np.full((len(m_p), len(m_c)), np.nan)
    for row in summary.rows:
        if row['mean_eps_rel'] not in (None, ''):
            values[m_p.index(int(row['M_P'])), m_c.index(int(row['M_C']))] = row['mean_eps_rel']

    fig = Figure(figsize=(6, 5))
    ax = fig.subplots()
    image = ax.imshow(values, origin='lower', cmap='viridis', aspect='auto')
    fig.colorbar(image, ax=ax, label='mean relative error')
    ax.set_xticks(range(len(m_c)))
    ax.set_xticklabels(m_c)
    ax.set_yticks(range(len(m_p)))
    ax.set_yticklabels(m_p)
    ax.set_xlabel('Clifford configurations $M_C$')
    ax.set_ylabel('insertion patterns $M_P$')
    return _save(fig, path)


def plot_convergence(
    samples: Sequence[int], mean_eps: Sequence[float], fit: 'ConvergenceFit', path: PathLike
) -> Path:
    """Mean relative error against sample count on log-log axes, with the fitted line"""
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    ax.loglog(samples, mean_eps, 'o', label='mean over repeats')
    if fit.slope is not None:
        fitted = np.exp(fit.intercept) * np.asarray(samples, dtype=float) ** fit.slope
        ax.loglog(samples, fitted, '-', label=f'fit, slope {fit.slope:.3f}')
    ax.set_xlabel('samples $M$')
    ax.set_ylabel('relative error')
    ax.grid(True, which='both', alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_scaling_compare(table: 'ResultTable', path: PathLike) -> Path:
    """SMC sample counts and NDE-CS shot counts against Trotter steps, one line per width"""
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for n, points in _series(table.rows, 'n', 'N_or_D', 'smc_samples').items():
        ax.semilogy(*zip(*points), 'o--', label=f'SMC, n={n}')
    for n, points in _series(table.rows, 'n', 'N_or_D', 'ndecs_shots').items():
        ax.semilogy(*zip(*points), 's-', label=f'NDE-CS, n={n}')
    ax.set_xlabel('Trotter steps $N$')
    ax.set_ylabel('cost at target error')
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_spd_scaling(table: 'ResultTable', path: PathLike) -> Path:
    """Relative error against path budget, one line per block count"""
    fig = Figure(figsize=(6, 4))
    ax = fig.subplots()
    for D, points in _series(table.rows, 'N_or_D', 'm_max', 'eps_rel').items():
        ax.plot(*zip(*points), 'o-', label=f'D={D}')
    ax.set_xscale('log', base=2)
    ax.set_xlabel('path budget $m_{max}$')
    ax.set_ylabel('relative error')
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)
