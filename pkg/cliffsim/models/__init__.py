"""Data models for Pauli operators, circuits, noise, engine settings and results"""
# flake8: noqa: F401
from .pauli import PauliObservable, PauliString, PhaseFreeKey, observable_add, observable_scale
from .noise import HardwareNoiseProfile, NoiseFactor, PauliNoiseChannel, SignedPauliMixture
from .circuit import (
    CLIFFORD_ANGLE_TOL,
    CLIFFORD_KINDS,
    Circuit,
    CliffordConfiguration,
    CliffordGate,
    Gate,
    InsertionPattern,
    Layer,
    ParamCircuit,
    PauliInsertion,
    PauliRotation,
    clifford_power,
)
from .config import (
    DEFAULT_SHOTS,
    DEFAULT_TRAJECTORIES,
    EXHAUSTIVE_LIMIT,
    CircuitSpec,
    DeviceEmulatorConfig,
    ExperimentManifest,
    GridSpec,
    TruncationPolicy,
)
from .results import (
    CoefficientVector,
    ConfigSample,
    EstimatorResult,
    FitProblem,
    GateDecomposition,
    NdecsEstimate,
    PauliTransferMatrix,
    StateVector,
)
