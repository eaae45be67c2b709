"""Result containers returned by the engines, estimators and the NDE-CS protocol.

.. automodsumm:: cliffsim.models.results
   :classes-only:
   :nosignatures:
"""
from logging import getLogger
from math import isfinite
from typing import Optional, Tuple

import numpy as np
from attr import define, field, frozen

from .circuit import CliffordConfiguration, InsertionPattern

__all__ = [
    'CoefficientVector',
    'ConfigSample',
    'EstimatorResult',
    'FitProblem',
    'GateDecomposition',
    'NdecsEstimate',
    'PauliTransferMatrix',
    'StateVector',
]

logger = getLogger(__name__)


def _as_array(dtype):
    return lambda value: np.asarray(value, dtype=dtype)


@frozen
class StateVector:
    """Amplitudes of an n-qubit pure state, big-endian (qubit 0 is the most significant bit)"""

    n_qubits: int = field()
    amplitudes: np.ndarray = field(converter=_as_array(complex), eq=False, repr=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@frozen
class PauliTransferMatrix:
    """Real ``4**n x 4**n`` matrix ``R[i, j] = Tr[P_i E(P_j)] / 2**n`` over the Pauli basis in
    ``I, X, Y, Z`` lexicographic order
    """

    n_qubits: int = field()
    matrix: np.ndarray = field(converter=_as_array(float), eq=False, repr=False)

    def __matmul__(self, other: 'PauliTransferMatrix') -> 'PauliTransferMatrix':
        return PauliTransferMatrix(self.n_qubits, self.matrix @ other.matrix)

    def allclose(self, other: 'PauliTransferMatrix', atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=atol))


@frozen
class GateDecomposition:
    """Coefficients ``a_k`` of a rotation channel over ``R_P(k*pi/2)``, ``k = 0..3``"""

    coefficients: Tuple[float, float, float, float] = field(
        converter=lambda v: tuple(float(a) for a in v)
    )

    def __attrs_post_init__(self):
        if len(self.coefficients) != 4:
            raise ValueError(f'Expected 4 coefficients, got {len(self.coefficients)}')

    @property
    def l1(self) -> float:
        return float(sum(abs(a) for a in self.coefficients))

    @property
    def probabilities(self) -> np.ndarray:
        weights = np.abs(self.coefficients)
        return weights / weights.sum()

    @property
    def signs(self) -> np.ndarray:
        """``sign(a_k)``, with ``sign(0) = +1``"""
        return np.where(np.asarray(self.coefficients) < 0, -1.0, 1.0)

    @property
    def is_convex(self) -> bool:
        return all(a >= 0 for a in self.coefficients)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(k for k, a in enumerate(self.coefficients) if a != 0)

    def __getitem__(self, k: int) -> float:
        return self.coefficients[k]

    def __iter__(self):
        return iter(self.coefficients)


@frozen
class EstimatorResult:
    value: float = field(converter=float)
    std_error: float = field(converter=float)
    n_samples: int = field(converter=int)
    l1_prefactor: float = field(converter=float)

    def __attrs_post_init__(self):
        if self.std_error < 0:
            raise ValueError(f'std_error must be non-negative, got {self.std_error}')

    @property
    def variance_prefactor(self) -> float:
        """Empirical ``M * std_error**2``; see :py:func:`~cliffsim.quasiprob.spmc_variance` for the
        exact value on short circuits
        """
        return self.n_samples * self.std_error**2


@frozen
class ConfigSample:
    """Retained Clifford configurations, with their noiseless stabilizer expectations"""

    configs: Tuple[CliffordConfiguration, ...] = field(converter=tuple)
    values: Tuple[float, ...] = field(factory=tuple, converter=tuple)
    n_draws: int = field(default=0)

    def __attrs_post_init__(self):
        if len(set(self.configs)) != len(self.configs):
            raise ValueError('Duplicate configurations in sample')
        if self.values and len(self.values) != len(self.configs):
            raise ValueError('One noiseless value is required per configuration')

    def __iter__(self):
        return iter(self.configs)

    def __len__(self):
        return len(self.configs)


@define
class FitProblem:
    """Linear system ``design @ b ~ rhs``; rows are insertion patterns, columns configurations"""

    design: np.ndarray = field(converter=_as_array(float), eq=False, repr=False)
    rhs: np.ndarray = field(converter=_as_array(float), eq=False, repr=False)
    patterns: Tuple[InsertionPattern, ...] = field(factory=tuple, converter=tuple, repr=False)
    device_calls: int = field(default=0)

    def __attrs_post_init__(self):
        if self.design.ndim != 2 or self.design.shape[0] != self.rhs.shape[0]:
            raise ValueError(f'Inconsistent shapes: {self.design.shape} and {self.rhs.shape}')
        if self.patterns and len(self.patterns) != self.design.shape[0]:
            raise ValueError('One insertion pattern is required per design row')

    @property
    def shape(self) -> Tuple[int, int]:
        return self.design.shape


@frozen
class CoefficientVector:
    b: np.ndarray = field(converter=_as_array(float), eq=False)
    residual_norm: float = field(default=0.0, converter=float)
    rank: int = field(default=0)

    def __attrs_post_init__(self):
        if not np.all(np.isfinite(self.b)):
            raise ValueError('Fitted coefficients must be finite')

    def __len__(self):
        return len(self.b)


@frozen
class NdecsEstimate:
    value: float = field(converter=float)
    truth: Optional[float] = field(default=None)
    eps_abs: Optional[float] = field(default=None)
    eps_rel: Optional[float] = field(default=None)

    @classmethod
    def from_value(cls, value: float, truth: float = None) -> 'NdecsEstimate':
        """Fill in absolute and relative errors when the true value is known"""
        if truth is None or not isfinite(truth):
            return cls(value)
        eps_abs = abs(value - truth)
        eps_rel = eps_abs / abs(truth) if truth != 0 else None
        return cls(value, truth, eps_abs, eps_rel)
