"""Pauli noise channels, the two-qubit hardware noise profile, and signed Pauli mixtures.

.. automodsumm:: cliffsim.models.noise
   :classes-only:
   :nosignatures:
"""
from logging import getLogger
from typing import Iterable, Iterator, Optional, Tuple

from attr import field, frozen

from .pauli import PauliString

__all__ = ['HardwareNoiseProfile', 'NoiseFactor', 'PauliNoiseChannel', 'SignedPauliMixture']

logger = getLogger(__name__)


def _check_probability(instance, attribute, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f'{attribute.name} must be in [0, 1], got {value}')


def _check_gamma(instance, attribute, value):
    if value is not None and not 0.0 <= value <= 0.5:
        raise ValueError(f'{attribute.name} must be in [0, 0.5], got {value}')


@frozen
class NoiseFactor:
    """One single-Pauli channel ``rho -> w*rho + (1 - w)*P rho P``"""

    pauli: PauliString = field()
    w: float = field(converter=float, validator=_check_probability)

    @property
    def error_rate(self) -> float:
        return 1.0 - self.w


@frozen
class PauliNoiseChannel:
    """A composition of single-Pauli factors, stored in application order"""

    n_qubits: int = field()
    factors: Tuple[NoiseFactor, ...] = field(factory=tuple, converter=tuple)

    def __attrs_post_init__(self):
        for factor in self.factors:
            if factor.pauli.n_qubits != self.n_qubits:
                raise ValueError(
                    f'Noise factor {factor.pauli} does not act on {self.n_qubits} qubits'
                )

    @classmethod
    def identity(cls, n_qubits: int) -> 'PauliNoiseChannel':
        return cls(n_qubits)

    @classmethod
    def from_factors(
        cls, n_qubits: int, factors: Iterable[Tuple[PauliString, float]]
    ) -> 'PauliNoiseChannel':
        return cls(n_qubits, [NoiseFactor(p.hermitian(), w) for p, w in factors])

    @property
    def is_identity(self) -> bool:
        return all(f.w == 1.0 or f.pauli.is_identity for f in self.factors)

    @property
    def error_factors(self) -> Tuple[NoiseFactor, ...]:
        """Factors that can actually fire"""
        return tuple(f for f in self.factors if f.w < 1.0 and not f.pauli.is_identity)

    def compose(self, other: Optional['PauliNoiseChannel']) -> 'PauliNoiseChannel':
        """Apply ``self`` then ``other``"""
        if other is None:
            return self
        return PauliNoiseChannel(self.n_qubits, self.factors + other.factors)

    def __iter__(self) -> Iterator[NoiseFactor]:
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)


@frozen
class HardwareNoiseProfile:
    """Two-qubit gate noise: a correlated ZZ dephasing plus independent X, Y and Z flips on each
    touched qubit. ``axis_gamma``, if set, also attaches axis-aligned noise after every rotation.
    """

    gamma_zz: float = field(default=1e-3, converter=float, validator=_check_gamma)
    gamma_x: float = field(default=2e-3, converter=float, validator=_check_gamma)
    gamma_y: float = field(default=2e-3, converter=float, validator=_check_gamma)
    gamma_z: float = field(default=2e-3, converter=float, validator=_check_gamma)
    axis_gamma: Optional[float] = field(default=None, validator=_check_gamma)

    @classmethod
    def noiseless(cls) -> 'HardwareNoiseProfile':
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def is_noiseless(self) -> bool:
        return not any([self.gamma_zz, self.gamma_x, self.gamma_y, self.gamma_z, self.axis_gamma])


@frozen
class SignedPauliMixture:
    """A signed, trace-preserving combination ``sum_r p_r P_r . P_r`` of Pauli conjugations"""

    n_qubits: int = field()
    terms: Tuple[Tuple[PauliString, float], ...] = field(factory=tuple, converter=tuple)

    @property
    def total(self) -> float:
        return float(sum(p for _, p in self.terms))

    @property
    def one_norm(self) -> float:
        return float(sum(abs(p) for _, p in self.terms))

    def as_dict(self):
        return {pauli.key: p for pauli, p in self.terms}
