"""Exceptions raised for domain-level precondition failures. All of them subclass a builtin
exception type, so callers that only care about ``ValueError``/``RuntimeError`` can keep doing so.
"""
__all__ = [
    'DimensionMismatchError',
    'NonCliffordGateError',
    'NonInvertibleChannelError',
    'SamplingBudgetError',
    'WidthGuardError',
]


class DimensionMismatchError(ValueError):
    """Two operands act on different numbers of qubits"""


class NonCliffordGateError(ValueError):
    """A gate with a non-Clifford angle reached an engine that only handles Clifford circuits"""


class WidthGuardError(ValueError):
    """A dense simulation was requested for more qubits than the configured limit"""


class NonInvertibleChannelError(ValueError):
    """A Pauli noise factor with ``w == 1/2`` has no inverse"""


class SamplingBudgetError(RuntimeError):
    """Configuration sampling exhausted its attempt budget without retaining anything"""


def check_qubits(n_1: int, n_2: int, what: str = 'operands'):
    """Raise a :py:class:`DimensionMismatchError` if two qubit counts differ"""
    if n_1 != n_2:
        raise DimensionMismatchError(f'Qubit count mismatch between {what}: {n_1} != {n_2}')
