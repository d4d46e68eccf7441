"""Numerical laboratory for coupled second-order systems with delayed point damping."""

from . import analysis
from .delay import (
    DecayFit,
    DelayParams,
    DelayState,
    EnergyTrace,
    delay_energy,
    delay_weight_bounds,
    fit_decay_rate,
    simulate,
    transformed_delay_energy,
)
from .errors import LabError, NumericalError, ValidationError
from .galerkin import (
    BlockSystem,
    DeltaEstimate,
    FirstOrderGenerator,
    InitialData,
    OperatorQuadruple,
    TransformPair,
    build_block_system,
    build_generators,
    build_transform,
    conjugation_residual,
    estimate_delta,
    random_quadruple,
    transfer_resolvent_pair,
    validate_quadruple,
)
from .models import (
    ModalModel,
    ModalState,
    ModelConfig,
    ModelKind,
    adjoint_frequencies,
    adjoint_trace,
    assemble_model,
    modal_initial_data,
    mode_frequencies,
    point_control_vector,
)

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "DecayFit",
    "DelayParams",
    "DelayState",
    "EnergyTrace",
    "delay_energy",
    "delay_weight_bounds",
    "fit_decay_rate",
    "simulate",
    "transformed_delay_energy",
    "BlockSystem",
    "DeltaEstimate",
    "FirstOrderGenerator",
    "InitialData",
    "OperatorQuadruple",
    "TransformPair",
    "build_block_system",
    "build_generators",
    "build_transform",
    "conjugation_residual",
    "estimate_delta",
    "random_quadruple",
    "transfer_resolvent_pair",
    "validate_quadruple",
    "ModalModel",
    "ModalState",
    "ModelConfig",
    "ModelKind",
    "adjoint_frequencies",
    "adjoint_trace",
    "assemble_model",
    "modal_initial_data",
    "mode_frequencies",
    "point_control_vector",
    "LabError",
    "NumericalError",
    "ValidationError",
    "__version__",
]
