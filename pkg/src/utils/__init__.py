"""
Utility modules for the Fock-space max-entropy toolkit.

Provides configuration loading, resampling statistics, error types and data export.
"""

from .errors import (
    FieldEnsembleError,
    ConfigError,
    CapacityError,
    DimensionMismatchError,
    DegenerateWeightsError,
    EssCollapseError,
    InfeasibleTargetError,
    NonConvergenceError,
    ProjectionError,
    ConstraintViolationError,
)
from .config import SolverConfig, ExperimentConfig, load_experiment_config, load_system_config
from .resampling import block_slices, ess_from_log_weights, ratio_jackknife, statistic_jackknife
from .data_export import ResultExporter, to_serializable, density_matrix_to_json, density_matrix_from_json

__all__ = [
    'FieldEnsembleError',
    'ConfigError',
    'CapacityError',
    'DimensionMismatchError',
    'DegenerateWeightsError',
    'EssCollapseError',
    'InfeasibleTargetError',
    'NonConvergenceError',
    'ProjectionError',
    'ConstraintViolationError',
    'SolverConfig',
    'ExperimentConfig',
    'load_experiment_config',
    'load_system_config',
    'block_slices',
    'ess_from_log_weights',
    'ratio_jackknife',
    'statistic_jackknife',
    'ResultExporter',
    'to_serializable',
    'density_matrix_to_json',
    'density_matrix_from_json',
]
