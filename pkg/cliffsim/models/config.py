"""Engine settings and experiment manifests. Manifests are loaded from TOML by
:py:func:`cliffsim.harness.load_manifest`; any key left out falls back to the desk-scale default
defined here.

.. automodsumm:: cliffsim.models.config
   :classes-only:
   :nosignatures:
"""
from logging import getLogger
from math import pi
from typing import List, Optional

from attr import define, field, frozen
from attr.validators import in_, instance_of, optional

from .noise import HardwareNoiseProfile

__all__ = [
    'DEFAULT_SHOTS',
    'DEFAULT_TRAJECTORIES',
    'EXHAUSTIVE_LIMIT',
    'CircuitSpec',
    'DeviceEmulatorConfig',
    'ExperimentManifest',
    'GridSpec',
    'TruncationPolicy',
]

DEFAULT_SHOTS = 2**14
DEFAULT_TRAJECTORIES = 2048
# Largest number of Pauli-error configurations that are enumerated instead of sampled
EXHAUSTIVE_LIMIT = 2**16

TRAJECTORY_POLICIES = ['auto', 'exhaustive', 'density', 'sampled']
SHOT_MODES = ['per_term', 'shared']
EXPERIMENT_KINDS = ['ndecs-grid', 'smc-convergence', 'scaling-compare', 'spd-scaling', 'verify']
TRUTH_SOURCES = ['dense', 'analytic-identity', 'untruncated-spd']
# 'auto' is magnetization for Trotter circuits and Z on qubit 0 for the structured family
OBSERVABLES = ['auto', 'magnetization', 'z0']

logger = getLogger(__name__)


def _positive(instance, attribute, value):
    if value is not None and value < 1:
        raise ValueError(f'{attribute.name} must be >= 1, got {value}')


def _shots(value: Optional[int]) -> Optional[int]:
    """TOML has no null, so manifests write exact (infinite-shot) measurement as 0"""
    return None if value is None or value == 0 else int(value)


@frozen
class DeviceEmulatorConfig:
    """Settings for the emulated noisy device.

    Args:
        n_shots: Shots per Pauli term; ``None`` (or 0) gives exact (infinite-shot) values
        trajectories: Error-trajectory policy: ``auto``, ``exhaustive``, ``density`` or ``sampled``
        n_trajectories: Number of sampled trajectories for the ``sampled`` policy
        seed: Root seed for trajectory sampling and shot noise
        shot_mode: ``per_term`` measures every Pauli term with ``n_shots`` shots; ``shared``
            splits ``n_shots`` evenly across terms
    """

    n_shots: Optional[int] = field(default=DEFAULT_SHOTS, converter=_shots, validator=_positive)
    trajectories: str = field(default='auto', validator=in_(TRAJECTORY_POLICIES))
    n_trajectories: int = field(default=DEFAULT_TRAJECTORIES, validator=_positive)
    seed: Optional[int] = field(default=None)
    shot_mode: str = field(default='per_term', validator=in_(SHOT_MODES))

    @classmethod
    def exact(cls, **kwargs) -> 'DeviceEmulatorConfig':
        """Infinite shots with exhaustive trajectories"""
        kwargs.setdefault('trajectories', 'exhaustive')
        return cls(n_shots=None, **kwargs)


@frozen
class TruncationPolicy:
    """Keep at most ``m_max`` Pauli paths (``None`` for no limit), ranked by ``|weight|`` with ties
    broken by ``(x_bits, z_bits)``
    """

    m_max: Optional[int] = field(default=None, validator=_positive)

    @classmethod
    def unbounded(cls) -> 'TruncationPolicy':
        return cls(None)


@define
class CircuitSpec:
    """Benchmark circuit family and its parameters"""

    family: str = field(default='trotter', validator=in_(['trotter', 'structured']))
    n: int = field(default=8)
    steps: int = field(default=3)
    blocks: int = field(default=6)
    J: float = field(default=1.0)
    h: float = field(default=-1.0)
    T: float = field(default=1.0)
    theta: float = field(default=0.0)
    phi: float = field(default=pi / 4)
    native: bool = field(default=True)
    observable: str = field(default='auto', validator=in_(OBSERVABLES))


@define
class GridSpec:
    m_c: List[int] = field(factory=lambda: [25, 50, 100, 200, 400])
    m_p: List[int] = field(factory=lambda: [5, 10, 20, 40, 80])
    samples: List[int] = field(factory=lambda: [10**3, 10**4, 10**5])
    m_max: List[int] = field(factory=lambda: [2**k for k in range(0, 13)])
    qubits: List[int] = field(factory=lambda: [6, 8])
    steps: List[int] = field(factory=lambda: [1, 2, 3])
    blocks: List[int] = field(factory=lambda: [1, 2, 3, 4, 5, 6])
    target_eps_rel: float = field(default=0.01)
    thresholds: List[float] = field(factory=lambda: [0.8, 0.6, 0.4, 0.1, 0.01])

    def __attrs_post_init__(self):
        for name in ['m_c', 'm_p', 'samples', 'm_max', 'qubits', 'steps', 'blocks']:
            if not getattr(self, name):
                raise ValueError(f'Grid {name} must not be empty')


@define
class ExperimentManifest:
    """Everything needed to reproduce one experiment run"""

    kind: str = field(default='ndecs-grid', validator=in_(EXPERIMENT_KINDS))
    circuit: CircuitSpec = field(factory=CircuitSpec)
    noise: HardwareNoiseProfile = field(factory=HardwareNoiseProfile)
    device: DeviceEmulatorConfig = field(factory=DeviceEmulatorConfig)
    grid: GridSpec = field(factory=GridSpec)
    repeats: int = field(default=20, validator=_positive)
    seed: int = field(default=0, validator=instance_of(int))
    truth: str = field(default='dense', validator=in_(TRUTH_SOURCES))
    constraint_mode: str = field(default='none', validator=in_(['none', 'mirror']))
    decomposition: str = field(default='optimal', validator=in_(['optimal', 'bennink']))
    max_attempts: Optional[int] = field(default=None, validator=optional(_positive))
