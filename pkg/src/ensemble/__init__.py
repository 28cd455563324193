"""
Statistical states on projective Fock space.

Provides expectation maps, the grand canonical ensemble and its dual solver,
the operator-exponential state, and coherent-state foliation probes.
"""

from .fields import (
    ClassicalField,
    DensityMatrix,
    ScalarEstimate,
    WeightedBatch,
    weigh,
    expectation_field,
    creation_expectation,
    mean_photon_number,
    density_matrix_mc,
    ensemble_expectation,
)
from .maxent import (
    ChemicalPotential,
    GibbsEnsemble,
    MaxEntSolution,
    VariationalReport,
    log_weight,
    partition_function,
    mean_field_and_covariance,
    log_partition_gradient,
    feasibility_bound,
    sampled_feasibility_bound,
    gibbs_ensemble,
    solve_chemical_potential,
    ensemble_entropy,
    gibbs_variational_check,
    mixture_log_density,
)
from .opstate import (
    OperatorGibbsState,
    operator_gibbs,
    log_q_gradient,
    solve_mu_operator,
    von_neumann_entropy,
    trace_distance,
    fidelity,
    cutoff_sweep,
)
from .coherent import (
    CoherentPoint,
    FoliationReport,
    coherent_point,
    eigen_residual,
    zero_field_family,
    foliation_probe,
)

__all__ = [
    'ClassicalField',
    'DensityMatrix',
    'ScalarEstimate',
    'WeightedBatch',
    'weigh',
    'expectation_field',
    'creation_expectation',
    'mean_photon_number',
    'density_matrix_mc',
    'ensemble_expectation',
    'ChemicalPotential',
    'GibbsEnsemble',
    'MaxEntSolution',
    'VariationalReport',
    'log_weight',
    'partition_function',
    'mean_field_and_covariance',
    'log_partition_gradient',
    'feasibility_bound',
    'sampled_feasibility_bound',
    'gibbs_ensemble',
    'solve_chemical_potential',
    'ensemble_entropy',
    'gibbs_variational_check',
    'mixture_log_density',
    'OperatorGibbsState',
    'operator_gibbs',
    'log_q_gradient',
    'solve_mu_operator',
    'von_neumann_entropy',
    'trace_distance',
    'fidelity',
    'cutoff_sweep',
    'CoherentPoint',
    'FoliationReport',
    'coherent_point',
    'eigen_residual',
    'zero_field_family',
    'foliation_probe',
]
