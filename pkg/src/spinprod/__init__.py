"""Few-qubit simulation of nonlocal generalized spin-product measurements."""

from .analysis import NoisePoint, delta_gamma, noise_surface, phi_for, strength_concurrence_check
from .meastheory import (
    POVM,
    MeasurementOperatorSet,
    QuantumInstrument,
    apply_instrument,
    build_mem_operators,
    build_nmem_operators,
    coarse_grain,
    povm_of,
    strength_of,
)
from .qcore import DensityMatrix, StateVector, concurrence, partial_trace, purity, schmidt, tensor
from .schemes import (
    MeterSpec,
    SchemeRun,
    instrument_from_run,
    prepare_meter,
    prepare_meter_by_filter,
    run_erasure,
    run_mem,
    run_nmem,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "MeasurementOperatorSet",
    "MeterSpec",
    "NoisePoint",
    "POVM",
    "QuantumInstrument",
    "SchemeRun",
    "StateVector",
    "apply_instrument",
    "build_mem_operators",
    "build_nmem_operators",
    "coarse_grain",
    "concurrence",
    "delta_gamma",
    "instrument_from_run",
    "noise_surface",
    "partial_trace",
    "phi_for",
    "povm_of",
    "prepare_meter",
    "prepare_meter_by_filter",
    "purity",
    "run_erasure",
    "run_mem",
    "run_nmem",
    "schmidt",
    "strength_concurrence_check",
    "strength_of",
    "tensor",
]
