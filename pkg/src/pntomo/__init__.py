"""Photon-number tomography: simulate displaced photon counting and invert it."""

from .fock import (
    ConvergenceError,
    DensityMatrix,
    SqueezeSpec,
    StateSpec,
    TruncationError,
    ValidationError,
    annihilation_operator,
    build_state,
    displacement_operator,
    displacement_pad,
    fidelity,
    number_operator,
    squeeze_operator,
    squeeze_pad,
    trace_distance,
)
from .measurement import (
    MeasurementTable,
    apply_efficiency,
    build_table,
    displaced_number_probabilities,
    invert_efficiency,
    pre_squeeze,
    sample_counts,
)
from .reconstruction import (
    KernelParams,
    PhaseSpaceGrid,
    ReconstructionReport,
    admissible_s_range,
    effective_efficiency,
    kernel,
    make_grid,
    q_from_zero_counts,
    reconstruct,
    t_operator,
)
from .quasiprob import characteristic_function, verify_squeeze_scaling, weight_function

__all__ = [
    "ConvergenceError",
    "DensityMatrix",
    "KernelParams",
    "MeasurementTable",
    "PhaseSpaceGrid",
    "ReconstructionReport",
    "SqueezeSpec",
    "StateSpec",
    "TruncationError",
    "ValidationError",
    "admissible_s_range",
    "annihilation_operator",
    "apply_efficiency",
    "build_state",
    "build_table",
    "characteristic_function",
    "displaced_number_probabilities",
    "displacement_operator",
    "displacement_pad",
    "effective_efficiency",
    "fidelity",
    "invert_efficiency",
    "kernel",
    "make_grid",
    "number_operator",
    "pre_squeeze",
    "q_from_zero_counts",
    "reconstruct",
    "sample_counts",
    "squeeze_operator",
    "squeeze_pad",
    "t_operator",
    "trace_distance",
    "verify_squeeze_scaling",
    "weight_function",
]

__version__ = "0.1.0"
