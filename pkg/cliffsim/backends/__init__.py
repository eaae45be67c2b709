"""Expectation engines. See :py:func:`init_backend` for selecting one by name."""
# flake8: noqa: F401
from logging import getLogger
from typing import Type, Union

from .._utils import get_valid_kwargs
from .base import BaseEngine, Initial, LoweredCircuit, Op, lower_circuit, lower_gate, parse_initial
from .dense import (
    DenseEngine,
    DeviceEmulator,
    apply_shot_noise,
    channel_ptm,
    circuit_unitary,
    decomposition_ptm,
    density_expectation,
    run_density_matrix,
    run_statevector,
    state_expectation,
)
from .spd import PauliPathSet, SpdEngine, spd_expectation, spd_propagate, split_angle
from .stabilizer import (
    HeisenbergBatch,
    StabilizerEngine,
    StabilizerTableau,
    heisenberg_noisy_expectation,
)

BackendSpecifier = Union[str, BaseEngine, Type[BaseEngine]]
logger = getLogger(__name__)

BACKEND_CLASSES = {
    'dense': DenseEngine,
    'spd': SpdEngine,
    'stabilizer': StabilizerEngine,
}


def init_backend(backend: BackendSpecifier = None, **kwargs) -> BaseEngine:
    """Initialize an engine from a name, class, or instance. Keyword arguments the engine does not
    accept are ignored.
    """
    logger.debug(f'Initializing backend: {backend}')
    if isinstance(backend, BaseEngine):
        return backend
    elif isinstance(backend, type):
        return backend(**get_valid_kwargs(backend.__init__, kwargs))
    elif not backend:
        backend = 'stabilizer'

    backend = str(backend).lower()
    if backend not in BACKEND_CLASSES:
        raise ValueError(f'Invalid backend: {backend}. Choose from: {list(BACKEND_CLASSES)}')
    cls = BACKEND_CLASSES[backend]
    return cls(**get_valid_kwargs(cls.__init__, kwargs))
