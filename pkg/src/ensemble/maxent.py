"""
Maximum-Entropy Module
Grand canonical ensembles on projective Fock space and the dual solver for
the chemical potential conjugate to a target classical field.

The Gibbs density relative to the uniform probability measure is

    p(x) = exp(-2 Re(mu . xi(x))) / Z(mu),    xi(x) = <x|A|x>

so it depends on x only through its classical field. In real coordinates
theta = (Re mu, Im mu) the exponent is -2 theta . s(x) with
s = (Re xi, -Im xi), hence

    grad log Z = -2 E[s],    hess log Z = 4 Cov[s].

This pins the sign convention: the constraint E[xi] = target is the
ground truth, and d log Z / d mu carries a minus sign.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from hilbert.fock import LadderOperators
from hilbert.projective import ProjectivePoint, SampleBatch, sample_uniform
from utils.config import SolverConfig
from utils.errors import (
    ConstraintViolationError,
    DegenerateWeightsError,
    DimensionMismatchError,
    EssCollapseError,
    InfeasibleTargetError,
    NonConvergenceError,
)
from utils.resampling import (
    DEFAULT_BLOCKS,
    block_slices,
    jackknife,
    ratio_jackknife,
    statistic_jackknife,
)

from .fields import (
    ClassicalField,
    ScalarEstimate,
    WeightedBatch,
    batch_expectation_fields,
    weigh,
)

logger = logging.getLogger(__name__)

ARMIJO_SLOPE = 1e-4
FEASIBILITY_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class ChemicalPotential:
    """Lagrange multiplier dual to the field constraint, one complex entry per mode."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=complex)).ravel()
        if not np.all(np.isfinite(mu)):
            raise ValueError("Chemical potential components must be finite")
        mu.setflags(write=False)
        object.__setattr__(self, 'mu', mu)

    @classmethod
    def of(cls, values: Union[complex, Sequence[complex], np.ndarray]) -> 'ChemicalPotential':
        return cls(np.atleast_1d(np.asarray(values, dtype=complex)))

    @classmethod
    def zero(cls, num_modes: int) -> 'ChemicalPotential':
        return cls(np.zeros(num_modes, dtype=complex))

    @classmethod
    def from_real(cls, theta: np.ndarray) -> 'ChemicalPotential':
        theta = np.asarray(theta, dtype=float)
        half = theta.size // 2
        return cls(theta[:half] + 1j * theta[half:])

    @property
    def num_modes(self) -> int:
        return self.mu.shape[0]

    def to_real(self) -> np.ndarray:
        return np.concatenate([self.mu.real, self.mu.imag])

    def norm(self) -> float:
        return float(np.linalg.norm(self.mu))


def as_field(target: Union[ClassicalField, complex, Sequence[complex]]) -> ClassicalField:
    return target if isinstance(target, ClassicalField) else ClassicalField.of(target)


def as_mu(mu: Union[ChemicalPotential, complex, Sequence[complex]]) -> ChemicalPotential:
    return mu if isinstance(mu, ChemicalPotential) else ChemicalPotential.of(mu)


def check_modes(num_modes: int, ops: LadderOperators, what: str):
    if num_modes != ops.num_modes:
        raise DimensionMismatchError(f"{what} has {num_modes} modes, operators have {ops.num_modes}")


def field_log_weights(mu: ChemicalPotential, fields: np.ndarray) -> np.ndarray:
    """Gibbs exponent -2 Re(mu . xi) for an (n, M) array of classical fields."""
    return -2.0 * np.real(np.asarray(fields) @ mu.mu)


def log_weight(mu: ChemicalPotential, x: ProjectivePoint, ops: LadderOperators) -> float:
    """
    Unnormalized Gibbs log density -2 Re(sum_m mu_m xi_m(x)).

    Args:
        mu: Chemical potential
        x: Projective point
        ops: Ladder operators

    Returns:
        Real log weight
    """
    mu = as_mu(mu)
    check_modes(mu.num_modes, ops, "Chemical potential")
    fields = batch_expectation_fields(x.representative[None, :], ops)
    return float(field_log_weights(mu, fields)[0])


def _log_mean_exp(log_weights: np.ndarray, n_blocks: int) -> ScalarEstimate:
    shift = float(np.max(log_weights))
    scaled = np.exp(log_weights - shift)
    slices = block_slices(scaled.size, n_blocks)
    sums = np.array([scaled[s].sum() for s in slices])
    counts = np.array([s.stop - s.start for s in slices], dtype=float)
    value, stderr = statistic_jackknife(sums, counts, lambda r: shift + np.log(r))
    return ScalarEstimate(value=value, stderr=stderr)


def partition_function(mu: ChemicalPotential, batch: SampleBatch, ops: LadderOperators,
                       n_blocks: int = DEFAULT_BLOCKS) -> ScalarEstimate:
    """
    Estimate log Z(mu) as the log of the batch mean of exp(log_weight).

    The largest log weight is shifted out before exponentiating, so log Z(0)
    is exactly 0.

    Args:
        mu: Chemical potential
        batch: Fubini-Study-uniform batch
        ops: Ladder operators on the batch's space
        n_blocks: Number of jackknife blocks

    Returns:
        ScalarEstimate of log Z (real value)
    """
    mu = as_mu(mu)
    check_modes(mu.num_modes, ops, "Chemical potential")
    fields = batch_expectation_fields(batch.points, ops)
    return _log_mean_exp(field_log_weights(mu, fields), n_blocks)


@dataclass(frozen=True, eq=False)
class Moments:
    """Weighted first and second moments of s = (Re xi, Im xi) under a Gibbs density."""

    log_z: ScalarEstimate
    mean: np.ndarray
    mean_stderr: np.ndarray
    cov: np.ndarray
    cov_stderr: np.ndarray
    ess: float

    @property
    def field(self) -> ClassicalField:
        return ClassicalField.from_real(self.mean)


def _moments(theta: np.ndarray, fields: np.ndarray, real_fields: np.ndarray,
             n_blocks: int) -> Moments:
    mu = ChemicalPotential.from_real(theta)
    lw = field_log_weights(mu, fields)
    log_z = _log_mean_exp(lw, n_blocks)

    w = np.exp(lw - np.max(lw))
    ess = float(w.sum() ** 2 / np.sum(w ** 2))
    slices = block_slices(w.size, n_blocks)
    w_sum = np.array([w[s].sum() for s in slices])
    first = np.stack([w[s] @ real_fields[s] for s in slices])
    second = np.stack([(w[s, None] * real_fields[s]).T @ real_fields[s] for s in slices])

    def covariance(tot_w, tot_first, tot_second):
        mean = tot_first / tot_w
        cov = tot_second / tot_w - np.outer(mean, mean)
        return mean, 0.5 * (cov + cov.T)

    mean, cov = covariance(w_sum.sum(), first.sum(axis=0), second.sum(axis=0))
    leave_out = [
        covariance(w_sum.sum() - w_sum[k], first.sum(axis=0) - first[k], second.sum(axis=0) - second[k])
        for k in range(len(slices))
    ]
    mean_se = jackknife(np.array([lo[0] for lo in leave_out]), mean)
    cov_se = jackknife(np.array([lo[1] for lo in leave_out]), cov)
    return Moments(log_z=log_z, mean=mean, mean_stderr=mean_se, cov=cov, cov_stderr=cov_se, ess=ess)


def mean_field_and_covariance(mu: ChemicalPotential, batch: SampleBatch, ops: LadderOperators,
                              ess_threshold: float = 0.01,
                              n_blocks: int = DEFAULT_BLOCKS) -> Moments:
    """
    Gibbs mean field and the covariance of (Re xi, Im xi).

    Args:
        mu: Chemical potential
        batch: Fubini-Study-uniform batch
        ops: Ladder operators on the batch's space
        ess_threshold: Minimum ESS as a fraction of the batch size
        n_blocks: Number of jackknife blocks

    Returns:
        Moments with mean field, 2M x 2M covariance, their errors and log Z

    Raises:
        DegenerateWeightsError: If the ESS is below threshold
    """
    mu = as_mu(mu)
    check_modes(mu.num_modes, ops, "Chemical potential")
    fields = batch_expectation_fields(batch.points, ops)
    real_fields = np.concatenate([fields.real, fields.imag], axis=1)
    moments = _moments(mu.to_real(), fields, real_fields, n_blocks)
    floor = ess_threshold * batch.count
    if moments.ess < floor:
        raise DegenerateWeightsError(moments.ess, floor)
    return moments


def log_partition_gradient(mu: ChemicalPotential, batch: SampleBatch,
                           ops: LadderOperators) -> np.ndarray:
    """Gradient of log Z in real coordinates (Re mu, Im mu): -2 (E[Re xi], -E[Im xi])."""
    mu = as_mu(mu)
    fields = batch_expectation_fields(batch.points, ops)
    real_fields = np.concatenate([fields.real, fields.imag], axis=1)
    moments = _moments(mu.to_real(), fields, real_fields, DEFAULT_BLOCKS)
    return -2.0 * _flip(moments.mean)


def _flip(coords: np.ndarray) -> np.ndarray:
    """Multiply the imaginary half by -1."""
    out = np.array(coords, dtype=float)
    out[out.shape[0] // 2:] *= -1.0
    return out


def feasibility_bound(ops: LadderOperators, direction: Union[ClassicalField, np.ndarray]) -> float:
    """
    Largest Re<u, xi> over all states, for the unit direction u.

    The achievable fields form a convex set whose support function in
    direction u is the top eigenvalue of the Hermitian part of
    sum_m conj(u_m) A_m.

    Args:
        ops: Ladder operators
        direction: Nonzero complex M-vector

    Returns:
        Support value (the achievable norm along u)
    """
    u = direction.xi if isinstance(direction, ClassicalField) else np.asarray(direction, dtype=complex)
    check_modes(u.shape[0], ops, "Direction")
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ValueError("Feasibility direction must be nonzero")
    u = u / norm
    k = sum(np.conj(u[m]) * ops.annihilation[m] for m in range(ops.num_modes))
    return float(np.linalg.eigvalsh(0.5 * (k + k.conj().T))[-1])


def sampled_feasibility_bound(ops: LadderOperators, direction: Union[ClassicalField, np.ndarray],
                              batch: SampleBatch, refine: int = 10) -> float:
    """
    Estimate the support value by maximizing over sampled points, then local ascent.

    Args:
        ops: Ladder operators
        direction: Nonzero complex M-vector
        batch: Starting points
        refine: Number of best sampled points refined with BFGS

    Returns:
        Best Re<u, xi(x)> found (never above feasibility_bound)
    """
    u = direction.xi if isinstance(direction, ClassicalField) else np.asarray(direction, dtype=complex)
    u = u / np.linalg.norm(u)
    d = batch.dimension

    def projection(points: np.ndarray) -> np.ndarray:
        return np.real(batch_expectation_fields(points, ops) @ np.conj(u))

    values = projection(batch.points)
    best = float(values.max())
    for i in np.argsort(values)[::-1][:refine]:
        z0 = batch.points[i]
        start = np.concatenate([z0.real, z0.imag])
        result = minimize(
            lambda z: -projection((z[:d] + 1j * z[d:])[None, :])[0],
            start,
            method='BFGS',
        )
        best = max(best, float(-result.fun))
    logger.debug(f"Sampled feasibility bound {best:.8f} from {batch.count} points")
    return best


@dataclass(frozen=True, eq=False)
class GibbsEnsemble:
    """
    Grand canonical density on projective space for a fixed chemical potential.

    Attributes:
        mu: Chemical potential
        ops: Ladder operators of the space
        log_z: Estimated log partition function
        diagnostics: ESS and standard errors of the estimate
    """

    mu: ChemicalPotential
    ops: LadderOperators
    log_z: ScalarEstimate
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def log_density(self, points: np.ndarray) -> np.ndarray:
        """Log density relative to the uniform measure for rows of `points`."""
        fields = batch_expectation_fields(points, self.ops)
        return field_log_weights(self.mu, fields) - self.log_z.value

    def weighted(self, batch: SampleBatch) -> WeightedBatch:
        return weigh(batch, field_log_weights(self.mu, batch_expectation_fields(batch.points, self.ops)))


def gibbs_ensemble(mu: ChemicalPotential, batch: SampleBatch, ops: LadderOperators,
                   n_blocks: int = DEFAULT_BLOCKS) -> GibbsEnsemble:
    """Normalize the Gibbs density for `mu` against `batch`."""
    mu = as_mu(mu)
    w = weigh(batch, field_log_weights(mu, batch_expectation_fields(batch.points, ops)))
    log_z = partition_function(mu, batch, ops, n_blocks)
    return GibbsEnsemble(mu=mu, ops=ops, log_z=log_z,
                         diagnostics={'ess': w.ess, 'ess_fraction': w.ess_fraction})


@dataclass(frozen=True, eq=False)
class MaxEntSolution:
    """
    Solved grand canonical ensemble.

    Attributes:
        mu: Chemical potential
        achieved_field: Gibbs mean field on the solver batch
        target_field: Requested field
        log_z: Log partition function estimate
        log_z_stderr: Jackknife error of log_z
        entropy: Differential entropy relative to the uniform measure
        residual_norm: |achieved - target|
        iterations: Solver iterations used
        mc_diagnostics: ESS, errors, covariance, residual history, fresh-batch validation
    """

    mu: ChemicalPotential
    achieved_field: ClassicalField
    target_field: ClassicalField
    log_z: float
    log_z_stderr: float
    entropy: float
    residual_norm: float
    iterations: int
    mc_diagnostics: Dict[str, Any] = field(default_factory=dict)

    def gibbs(self, ops: LadderOperators) -> GibbsEnsemble:
        return GibbsEnsemble(mu=self.mu, ops=ops,
                             log_z=ScalarEstimate(self.log_z, self.log_z_stderr),
                             diagnostics=dict(self.mc_diagnostics))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mu': [[z.real, z.imag] for z in self.mu.mu],
            'achieved_field': [[z.real, z.imag] for z in self.achieved_field.xi],
            'target_field': [[z.real, z.imag] for z in self.target_field.xi],
            'log_z': self.log_z,
            'log_z_stderr': self.log_z_stderr,
            'entropy': self.entropy,
            'residual_norm': self.residual_norm,
            'iterations': self.iterations,
            'mc_diagnostics': self.mc_diagnostics,
        }


def ensemble_entropy(sol: MaxEntSolution) -> float:
    """
    Differential entropy of the Gibbs density relative to the uniform measure.

    S = log Z + 2 Re(mu . achieved_field), never positive.
    """
    return float(sol.log_z + 2.0 * np.real(np.dot(sol.mu.mu, sol.achieved_field.xi)))


def backtracking_line_search(objective: Callable[[np.ndarray], float], theta: np.ndarray,
                             value: float, gradient: np.ndarray, direction: np.ndarray,
                             max_steps: int) -> Optional[float]:
    """
    Armijo backtracking along `direction`, halving from a unit step.

    Returns:
        Accepted step length, or None if no step gave sufficient decrease
    """
    slope = float(gradient @ direction)
    if slope >= 0:
        return None
    step = 1.0
    for _ in range(max_steps):
        trial = objective(theta + step * direction)
        if np.isfinite(trial) and trial <= value + ARMIJO_SLOPE * step * slope:
            return step
        step *= 0.5
    return None


def _precheck_feasible(target: ClassicalField, ops: LadderOperators) -> float:
    bound = feasibility_bound(ops, target)
    if target.norm() > bound * (1.0 - FEASIBILITY_MARGIN):
        raise InfeasibleTargetError(target.norm(), bound, "outside the convex hull of pure-state fields")
    return bound


def solve_chemical_potential(target: Union[ClassicalField, complex, Sequence[complex]],
                             cfg: SolverConfig, batch: SampleBatch, ops: LadderOperators,
                             initial_mu: Optional[ChemicalPotential] = None,
                             validate: bool = True) -> MaxEntSolution:
    """
    Find mu whose Gibbs ensemble reproduces the target field.

    Damped Newton on the convex dual log Z(theta) + 2 theta . s_target, with
    the Gibbs covariance as Hessian and gradient descent when it is
    ill-conditioned. One batch is reused for every mu, so the dual is a
    smooth deterministic function of mu.

    Args:
        target: Target classical field
        cfg: Solver configuration
        batch: Fubini-Study-uniform batch (common random numbers)
        ops: Ladder operators on the batch's space
        initial_mu: Starting point (default zero)
        validate: Re-estimate the field on a fresh batch (seed + 1) at the solution

    Returns:
        MaxEntSolution

    Raises:
        InfeasibleTargetError: Target outside the achievable set, or mu diverged past mu_cap
        EssCollapseError: Importance weights collapsed at some iterate
        NonConvergenceError: Residual above tolerance after max_iters iterations, or no descent step
    """
    target = as_field(target)
    check_modes(target.num_modes, ops, "Target field")
    if batch.dimension != ops.dimension:
        raise DimensionMismatchError(f"Batch dimension {batch.dimension} vs operators {ops.dimension}")

    fields = batch_expectation_fields(batch.points, ops)
    real_fields = np.concatenate([fields.real, fields.imag], axis=1)
    n_blocks = cfg.jackknife_blocks

    if target.is_zero() and initial_mu is None:
        # The uniform measure is the exact maximizer; its mean field vanishes by phase symmetry.
        moments = _moments(np.zeros(2 * ops.num_modes), fields, real_fields, n_blocks)
        logger.info("Zero target: uniform ensemble, mu = 0")
        return _solution(target, target, ChemicalPotential.zero(ops.num_modes), moments, 0, [0.0],
                         {'steps': [], 'sampled_field': _pairs(moments.field.xi)}, batch, cfg, ops,
                         validate)

    bound = _precheck_feasible(target, ops) if not target.is_zero() else float('inf')
    s_target = _flip(target.to_real())
    floor = cfg.ess_floor(batch.count)

    def dual(theta: np.ndarray) -> float:
        lw = field_log_weights(ChemicalPotential.from_real(theta), fields)
        shift = np.max(lw)
        return float(shift + np.log(np.mean(np.exp(lw - shift))) + 2.0 * theta @ s_target)

    theta = initial_mu.to_real() if initial_mu is not None else np.zeros(2 * ops.num_modes)
    history: List[float] = []
    steps: List[str] = []

    for iteration in range(cfg.max_iters + 1):
        moments = _moments(theta, fields, real_fields, n_blocks)
        mu = ChemicalPotential.from_real(theta)
        if moments.ess < floor:
            raise EssCollapseError(moments.ess, floor, list(mu.mu))

        residual_vec = moments.mean - target.to_real()
        residual = float(np.linalg.norm(residual_vec))
        history.append(residual)
        logger.debug(f"iter {iteration}: |mu|={mu.norm():.6g} residual={residual:.3e} ess={moments.ess:.1f}")

        if residual <= cfg.tolerance:
            logger.info(f"Dual solver converged in {iteration} iterations (residual {residual:.3e})")
            return _solution(ClassicalField.from_real(moments.mean), target, mu, moments, iteration,
                             history, {'steps': steps}, batch, cfg, ops, validate)
        if mu.norm() > cfg.mu_cap:
            raise InfeasibleTargetError(target.norm(), _achieved_bound(bound, moments),
                                        f"|mu| diverged past {cfg.mu_cap}")
        if iteration == cfg.max_iters:
            break

        gradient = -2.0 * _flip(residual_vec)
        signs = _flip(np.ones(theta.size))
        hessian = 4.0 * np.outer(signs, signs) * moments.cov + cfg.ridge * np.eye(theta.size)
        if np.linalg.cond(hessian) <= cfg.condition_cap:
            direction = -np.linalg.solve(hessian, gradient)
            kind = 'newton'
        else:
            direction = -gradient
            kind = 'gradient'

        value = dual(theta)
        step = backtracking_line_search(dual, theta, value, gradient, direction, cfg.line_search_steps)
        if step is None and kind == 'newton':
            direction, kind = -gradient, 'gradient'
            step = backtracking_line_search(dual, theta, value, gradient, direction, cfg.line_search_steps)
        if step is None:
            logger.error(f"Line search found no descent step at iteration {iteration}")
            raise NonConvergenceError(iteration, history)
        steps.append(kind)
        theta = theta + step * direction

    raise NonConvergenceError(cfg.max_iters, history)


def _achieved_bound(bound: float, moments: Moments) -> float:
    if np.isfinite(bound):
        return bound
    return float(np.linalg.norm(moments.mean))


def _pairs(values: np.ndarray) -> List[List[float]]:
    return [[float(z.real), float(z.imag)] for z in values]


def _solution(achieved: ClassicalField, target: ClassicalField, mu: ChemicalPotential,
              moments: Moments, iterations: int, history: List[float], extra: Dict[str, Any],
              batch: SampleBatch, cfg: SolverConfig, ops: LadderOperators,
              validate: bool) -> MaxEntSolution:
    diagnostics = {
        'ess': moments.ess,
        'ess_fraction': moments.ess / batch.count,
        'field_stderr': moments.mean_stderr.tolist(),
        'covariance': moments.cov.tolist(),
        'covariance_stderr': moments.cov_stderr.tolist(),
        'residual_history': history,
        'batch_seed': batch.seed,
        'batch_count': batch.count,
    }
    diagnostics.update(extra)
    if validate:
        diagnostics['validation'] = _validate(mu, target, batch, cfg, ops)

    residual = float(np.linalg.norm(achieved.xi - target.xi))
    sol = MaxEntSolution(
        mu=mu,
        achieved_field=achieved,
        target_field=target,
        log_z=float(moments.log_z.value),
        log_z_stderr=float(moments.log_z.stderr),
        entropy=0.0,
        residual_norm=residual,
        iterations=iterations,
        mc_diagnostics=diagnostics,
    )
    return replace(sol, entropy=ensemble_entropy(sol))


def _validate(mu: ChemicalPotential, target: ClassicalField, batch: SampleBatch,
              cfg: SolverConfig, ops: LadderOperators) -> Dict[str, Any]:
    seed = (batch.seed + 1) % 2 ** 64
    fresh = sample_uniform(batch.dimension, seed, batch.count, workers=cfg.threads,
                           chunk_size=cfg.chunk_size)
    fields = batch_expectation_fields(fresh.points, ops)
    real_fields = np.concatenate([fields.real, fields.imag], axis=1)
    moments = _moments(mu.to_real(), fields, real_fields, cfg.jackknife_blocks)
    residual = float(np.linalg.norm(moments.field.xi - target.xi))
    logger.info(f"Fresh-batch validation (seed {seed}): residual {residual:.3e}, ESS {moments.ess:.1f}")
    return {
        'seed': seed,
        'field': _pairs(moments.field.xi),
        'field_stderr': moments.mean_stderr.tolist(),
        'residual_norm': residual,
        'log_z': float(moments.log_z.value),
        'ess': moments.ess,
    }


def mixture_log_density(ensembles: Sequence[GibbsEnsemble], weights: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """Log density of a convex combination of Gibbs densities."""
    log_w = np.log(np.asarray(weights, dtype=float) / np.sum(weights))

    def log_density(points: np.ndarray) -> np.ndarray:
        terms = np.stack([lw + e.log_density(points) for lw, e in zip(log_w, ensembles)])
        shift = terms.max(axis=0)
        return shift + np.log(np.exp(terms - shift).sum(axis=0))

    return log_density


@dataclass(frozen=True)
class VariationalReport:
    """Entropy of the Gibbs density against one alternative with the same field."""

    gibbs_entropy: float
    alternative_entropy: float
    gap: float
    gap_stderr: float
    normalization: float
    constraint_residual: float
    n_sigma: float

    @property
    def gibbs_is_maximal(self) -> bool:
        return self.gap >= -self.n_sigma * self.gap_stderr


def gibbs_variational_check(sol: MaxEntSolution,
                            alternative_log_density: Callable[[np.ndarray], np.ndarray],
                            batch: SampleBatch, ops: LadderOperators,
                            n_sigma: float = 3.0,
                            tolerance: Optional[float] = None,
                            n_blocks: int = DEFAULT_BLOCKS) -> VariationalReport:
    """
    Compare the entropy of the solved Gibbs density with an alternative density.

    Both entropies -E_q[log q] are estimated on the same uniform batch, so
    their difference is free of independent sampling noise.

    Args:
        sol: Solved ensemble
        alternative_log_density: Log density relative to the uniform measure, on (n, d) points
        batch: Fubini-Study-uniform batch
        ops: Ladder operators
        n_sigma: Error margin in standard errors
        tolerance: Allowed constraint residual (default: residual of sol plus 1e-3)
        n_blocks: Number of jackknife blocks

    Returns:
        VariationalReport

    Raises:
        ConstraintViolationError: If the alternative is not normalized or misses the field
    """
    fields = batch_expectation_fields(batch.points, ops)
    log_p = field_log_weights(sol.mu, fields) - sol.log_z
    log_q = np.asarray(alternative_log_density(batch.points), dtype=float)
    p, q = np.exp(log_p), np.exp(log_q)
    slices = block_slices(batch.count, n_blocks)
    counts = np.array([s.stop - s.start for s in slices], dtype=float)

    norm_value, norm_se = statistic_jackknife(
        np.array([q[s].sum() for s in slices]), counts, lambda r: r)
    if abs(norm_value - 1.0) > n_sigma * norm_se + 1e-9:
        raise ConstraintViolationError('normalization', abs(norm_value - 1.0), n_sigma * norm_se)

    achieved = (q @ fields) / q.sum()
    constraint = float(np.linalg.norm(achieved - sol.target_field.xi))
    allowed = tolerance if tolerance is not None else sol.residual_norm + 1e-3
    if constraint > allowed:
        raise ConstraintViolationError('field constraint', constraint, allowed)

    per_point = np.stack([-p * log_p, -q * log_q, q * log_q - p * log_p], axis=1)
    sums = np.stack([per_point[s].sum(axis=0) for s in slices])
    (s_gibbs, s_alt, gap), se = ratio_jackknife(sums, counts)
    report = VariationalReport(
        gibbs_entropy=float(s_gibbs),
        alternative_entropy=float(s_alt),
        gap=float(gap),
        gap_stderr=float(se[2]),
        normalization=float(norm_value),
        constraint_residual=constraint,
        n_sigma=n_sigma,
    )
    logger.info(f"Variational check: gap {report.gap:.4e} +/- {report.gap_stderr:.2e}")
    return report
