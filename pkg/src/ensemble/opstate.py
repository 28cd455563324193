"""
Operator State Module
The operator-exponential density matrix rho = exp(-H) / Q with
H = sum_m (mu_m A_m + conj(mu_m) C_m), its moment matching, and the
distance measures used to compare it with the ensemble construction.

On the untruncated space exp(-H) is not trace class: H is unbounded with a
symmetric spectrum. The truncated Q therefore grows with the cutoff, which
cutoff_sweep measures instead of hiding.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.special import entr, logsumexp

from hilbert.fock import LadderOperators, build_basis, ladder_matrices
from utils.config import SolverConfig
from utils.errors import InfeasibleTargetError, NonConvergenceError

from .fields import ClassicalField, DensityMatrix
from .maxent import (
    ChemicalPotential,
    FEASIBILITY_MARGIN,
    backtracking_line_search,
    feasibility_bound,
    as_field,
    as_mu,
    check_modes,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OperatorGibbsState:
    """
    exp(-H)/Q for a chemical potential.

    Attributes:
        mu: Chemical potential
        rho: Normalized density matrix
        log_q: log tr exp(-H), exact
        spectrum: Eigenvalues of H in ascending order
    """

    mu: ChemicalPotential
    rho: DensityMatrix
    log_q: float
    spectrum: np.ndarray

    def field(self, ops: LadderOperators) -> ClassicalField:
        return ClassicalField([self.rho.expectation(a) for a in ops.annihilation])


def hamiltonian(mu: ChemicalPotential, ops: LadderOperators) -> np.ndarray:
    """H = sum_m mu_m A_m + conj(mu_m) C_m."""
    mu = as_mu(mu)
    check_modes(mu.num_modes, ops, "Chemical potential")
    h = np.zeros((ops.dimension, ops.dimension), dtype=complex)
    for m in range(ops.num_modes):
        h += mu.mu[m] * ops.annihilation[m] + np.conj(mu.mu[m]) * ops.creation[m]
    return h


def operator_gibbs(mu: Union[ChemicalPotential, complex, Sequence[complex]],
                   ops: LadderOperators) -> OperatorGibbsState:
    """
    Spectral construction of exp(-H)/Q.

    Args:
        mu: Chemical potential
        ops: Ladder operators

    Returns:
        OperatorGibbsState
    """
    mu = as_mu(mu)
    h = hamiltonian(mu, ops)
    eigvals, vecs = np.linalg.eigh(h)
    log_q = float(logsumexp(-eigvals))
    probs = np.exp(-eigvals - log_q)
    rho = (vecs * probs) @ vecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return OperatorGibbsState(mu=mu, rho=DensityMatrix(rho), log_q=log_q, spectrum=eigvals)


def _operator_field_real(theta: np.ndarray, ops: LadderOperators) -> np.ndarray:
    state = operator_gibbs(ChemicalPotential.from_real(theta), ops)
    return state.field(ops).to_real()


def log_q_gradient(mu: ChemicalPotential, ops: LadderOperators) -> np.ndarray:
    """
    d log Q / d(Re mu, Im mu) = -tr(rho dH), which equals -2 (Re <A>, -Im <A>).
    """
    state = operator_gibbs(mu, ops)
    grad_re = [-np.real(state.rho.expectation(a + c)) for a, c in zip(ops.annihilation, ops.creation)]
    grad_im = [-np.real(state.rho.expectation(1j * a - 1j * c)) for a, c in zip(ops.annihilation, ops.creation)]
    return np.array(grad_re + grad_im)


def _fd_jacobian(theta: np.ndarray, ops: LadderOperators, step: float) -> np.ndarray:
    jac = np.empty((theta.size, theta.size))
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        jac[:, k] = (_operator_field_real(theta + e, ops) - _operator_field_real(theta - e, ops)) / (2 * step)
    return jac


def solve_mu_operator(target: Union[ClassicalField, complex, Sequence[complex]],
                      ops: LadderOperators, cfg: SolverConfig,
                      initial_mu: Optional[ChemicalPotential] = None) -> OperatorGibbsState:
    """
    Find mu with tr(rho(mu) A_m) = target_m.

    Newton on the real 2M-dimensional residual with a central
    finite-difference Jacobian; steps are damped by backtracking on the
    convex dual log Q + 2 theta . (Re target, -Im target).

    Args:
        target: Target classical field
        ops: Ladder operators
        cfg: Solver configuration (operator_tolerance, fd_step, mu_cap, max_iters)
        initial_mu: Starting point (default zero)

    Returns:
        OperatorGibbsState at the solution

    Raises:
        InfeasibleTargetError: Target outside the attainable set or mu diverged
        NonConvergenceError: Residual above tolerance after max_iters, or no descent step
    """
    target = as_field(target)
    check_modes(target.num_modes, ops, "Target field")
    if target.is_zero() and initial_mu is None:
        return operator_gibbs(ChemicalPotential.zero(ops.num_modes), ops)

    bound = feasibility_bound(ops, target) if not target.is_zero() else float('inf')
    if target.norm() > bound * (1.0 - FEASIBILITY_MARGIN):
        raise InfeasibleTargetError(target.norm(), bound, "outside the attainable set of tr(rho A)")

    t_real = target.to_real()
    half = t_real.size // 2
    signs = np.concatenate([np.ones(half), -np.ones(half)])

    def dual(theta: np.ndarray) -> float:
        return operator_gibbs(ChemicalPotential.from_real(theta), ops).log_q + 2.0 * theta @ (signs * t_real)

    theta = initial_mu.to_real() if initial_mu is not None else np.zeros(t_real.size)
    history: List[float] = []
    for iteration in range(cfg.max_iters + 1):
        residual_vec = _operator_field_real(theta, ops) - t_real
        residual = float(np.linalg.norm(residual_vec))
        history.append(residual)
        logger.debug(f"operator iter {iteration}: residual={residual:.3e}")
        if residual <= cfg.operator_tolerance:
            logger.info(f"Operator solver converged in {iteration} iterations (residual {residual:.3e})")
            return operator_gibbs(ChemicalPotential.from_real(theta), ops)
        if np.linalg.norm(theta) > cfg.mu_cap:
            raise InfeasibleTargetError(target.norm(), bound, f"|mu| diverged past {cfg.mu_cap}")
        if iteration == cfg.max_iters:
            break

        jac = _fd_jacobian(theta, ops, cfg.fd_step)
        direction = -np.linalg.lstsq(jac, residual_vec, rcond=None)[0]
        gradient = -2.0 * signs * residual_vec
        step = backtracking_line_search(dual, theta, dual(theta), gradient, direction, cfg.line_search_steps)
        if step is None:
            direction = -gradient
            step = backtracking_line_search(dual, theta, dual(theta), gradient, direction,
                                            cfg.line_search_steps)
        if step is None:
            logger.error(f"Operator line search found no descent step at iteration {iteration}")
            raise NonConvergenceError(iteration, history)
        theta = theta + step * direction

    raise NonConvergenceError(cfg.max_iters, history)


def _matrix(rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    return rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def von_neumann_entropy(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """-sum lambda log lambda over the spectrum, with 0 log 0 = 0."""
    evals = np.clip(np.linalg.eigvalsh(_matrix(rho)), 0.0, None)
    return float(np.sum(entr(evals)))


def trace_distance(rho: Union[DensityMatrix, np.ndarray], sigma: Union[DensityMatrix, np.ndarray]) -> float:
    """Half the trace norm of rho - sigma."""
    diff = _matrix(rho) - _matrix(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    evals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return (vecs * np.sqrt(np.clip(evals, 0.0, None))) @ vecs.conj().T


def fidelity(rho: Union[DensityMatrix, np.ndarray], sigma: Union[DensityMatrix, np.ndarray]) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    root = _psd_sqrt(_matrix(rho))
    inner = root @ _matrix(sigma) @ root
    evals = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(evals)) ** 2))


@dataclass(frozen=True)
class CutoffPoint:
    """Operator state at one cutoff for a fixed mu."""

    cutoff: int
    dimension: int
    log_q: float
    field: List[complex]
    entropy: float
    mean_photon_number: float


def cutoff_sweep(mu: Union[ChemicalPotential, complex, Sequence[complex]], num_modes: int,
                 cutoffs: Sequence[int], max_dimension: int = 5000) -> List[CutoffPoint]:
    """
    Evaluate the operator state at fixed mu across cutoffs.

    Each truncated H is a principal block of the next, so log Q is
    nondecreasing in the cutoff by eigenvalue interlacing.

    Args:
        mu: Chemical potential
        num_modes: Number of modes
        cutoffs: Cutoffs to evaluate, in order
        max_dimension: Capacity cap passed to build_basis

    Returns:
        One CutoffPoint per cutoff
    """
    mu = as_mu(mu)
    points = []
    for cutoff in cutoffs:
        space = build_basis(num_modes, cutoff, max_dimension)
        ops = ladder_matrices(space)
        state = operator_gibbs(mu, ops)
        photons = float(np.real(state.rho.expectation(ops.total_number_operator())))
        points.append(CutoffPoint(
            cutoff=cutoff,
            dimension=space.dimension,
            log_q=state.log_q,
            field=list(state.field(ops).xi),
            entropy=von_neumann_entropy(state.rho),
            mean_photon_number=photons,
        ))
        logger.debug(f"Cutoff {cutoff}: log Q = {state.log_q:.6f}")
    return points
