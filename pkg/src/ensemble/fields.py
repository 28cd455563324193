"""
Fields Module
Expectation maps from projective points and weighted ensembles to classical
fields and density matrices.

Ensemble integrals over projective space are self-normalized importance
sampling sums over Fubini-Study-uniform batches. Every reduction is taken
over fixed index-ordered blocks, which also gives the jackknife errors.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from hilbert.fock import LadderOperators
from hilbert.projective import ProjectivePoint, SampleBatch
from utils.errors import DegenerateWeightsError, DimensionMismatchError
from utils.resampling import (
    DEFAULT_BLOCKS,
    block_slices,
    ess_from_log_weights,
    ratio_jackknife,
)

logger = logging.getLogger(__name__)

DEFAULT_ESS_THRESHOLD = 0.01
DENSITY_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class ClassicalField:
    """Complex amplitude per mode: the annihilation expectation a state must reproduce."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=complex)).ravel()
        if not np.all(np.isfinite(xi)):
            raise ValueError("Classical field components must be finite")
        xi.setflags(write=False)
        object.__setattr__(self, 'xi', xi)

    @classmethod
    def of(cls, values: Union[complex, Sequence[complex], np.ndarray]) -> 'ClassicalField':
        return cls(np.atleast_1d(np.asarray(values, dtype=complex)))

    @classmethod
    def from_real(cls, coords: np.ndarray) -> 'ClassicalField':
        """Inverse of to_real: (Re xi, Im xi) stacked."""
        coords = np.asarray(coords, dtype=float)
        half = coords.size // 2
        return cls(coords[:half] + 1j * coords[half:])

    @property
    def num_modes(self) -> int:
        return self.xi.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.xi))

    def to_real(self) -> np.ndarray:
        return np.concatenate([self.xi.real, self.xi.imag])

    def is_zero(self) -> bool:
        return not np.any(self.xi)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Hermitian, positive semidefinite, unit-trace matrix.

    Attributes:
        rho: Complex d x d matrix
        stderr: Optional per-entry standard error of a Monte Carlo estimate
    """

    rho: np.ndarray
    stderr: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"Density matrix must be square, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise ValueError("Density matrix entries must be finite")
        if np.max(np.abs(rho - rho.conj().T)) > DENSITY_TOLERANCE:
            raise ValueError("Density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > DENSITY_TOLERANCE:
            raise ValueError(f"Density matrix trace {np.trace(rho).real:.12g} != 1")
        if np.min(np.linalg.eigvalsh(rho)) < -DENSITY_TOLERANCE:
            raise ValueError("Density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, 'rho', rho)

    @classmethod
    def maximally_mixed(cls, d: int) -> 'DensityMatrix':
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def pure(cls, vector: np.ndarray) -> 'DensityMatrix':
        vec = np.asarray(vector, dtype=complex).ravel()
        vec = vec / np.linalg.norm(vec)
        return cls(np.outer(vec, vec.conj()))

    @property
    def dimension(self) -> int:
        return self.rho.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)

    def expectation(self, op: np.ndarray) -> complex:
        """tr(rho op)"""
        op = np.asarray(op)
        if op.shape != self.rho.shape:
            raise DimensionMismatchError(f"Operator shape {op.shape} vs density matrix {self.rho.shape}")
        return complex(np.sum(self.rho * op.T))


@dataclass(frozen=True)
class ScalarEstimate:
    """Monte Carlo estimate with its jackknife standard error."""

    value: complex
    stderr: float


@dataclass(frozen=True, eq=False)
class WeightedBatch:
    """
    Sample batch with unnormalized log importance weights.

    Attributes:
        batch: Fubini-Study-uniform points
        log_weights: One finite real log weight per point
        log_normalizer: logsumexp of the log weights
        ess: Effective sample size (sum w)^2 / sum w^2
    """

    batch: SampleBatch
    log_weights: np.ndarray
    log_normalizer: float
    ess: float

    @property
    def count(self) -> int:
        return self.batch.count

    @property
    def ess_fraction(self) -> float:
        return self.ess / self.count

    def scaled_weights(self) -> np.ndarray:
        """Weights divided by the largest one; summing in this scale cannot overflow."""
        return np.exp(self.log_weights - np.max(self.log_weights))

    def normalized_weights(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_normalizer)


def weigh(batch: SampleBatch, log_weights: Optional[np.ndarray] = None) -> WeightedBatch:
    """
    Attach log weights to a batch (uniform weights when omitted).

    Raises:
        DimensionMismatchError: If the weight vector length differs from the batch size
        ValueError: If any log weight is not finite
    """
    if log_weights is None:
        log_weights = np.zeros(batch.count)
    log_weights = np.asarray(log_weights, dtype=float).ravel()
    if log_weights.shape[0] != batch.count:
        raise DimensionMismatchError(f"{log_weights.shape[0]} weights for {batch.count} points")
    if not np.all(np.isfinite(log_weights)):
        raise ValueError("Log weights must be finite")
    log_weights.setflags(write=False)
    return WeightedBatch(
        batch=batch,
        log_weights=log_weights,
        log_normalizer=float(logsumexp(log_weights)),
        ess=ess_from_log_weights(log_weights),
    )


def require_ess(w: WeightedBatch, ess_threshold: float = DEFAULT_ESS_THRESHOLD):
    """
    Fail loudly when the weights are too concentrated.

    Args:
        w: Weighted batch
        ess_threshold: Minimum ESS as a fraction of the batch size

    Raises:
        DegenerateWeightsError: If ESS < ess_threshold * count
    """
    floor = ess_threshold * w.count
    if w.ess < floor:
        raise DegenerateWeightsError(w.ess, floor)
    if w.ess < 5 * floor:
        logger.warning(f"Effective sample size {w.ess:.1f} is close to threshold {floor:.1f}")


def _check_ops(dimension: int, ops: LadderOperators):
    if dimension != ops.dimension:
        raise DimensionMismatchError(f"Point dimension {dimension} vs operator dimension {ops.dimension}")


def batch_expectation_fields(points: np.ndarray, ops: LadderOperators,
                             creation: bool = False) -> np.ndarray:
    """
    <x|A_m|x> / <x|x> for every row of `points`.

    Args:
        points: Array of shape (n, d)
        ops: Ladder operators
        creation: Use C_m instead of A_m

    Returns:
        Complex array of shape (n, M)
    """
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    _check_ops(points.shape[1], ops)
    mats = ops.creation if creation else ops.annihilation
    norms = np.einsum('ij,ij->i', points.conj(), points).real
    out = np.empty((points.shape[0], len(mats)), dtype=complex)
    for m, mat in enumerate(mats):
        out[:, m] = np.einsum('ij,ij->i', points.conj(), points @ mat.T) / norms
    return out


def expectation_field(x: ProjectivePoint, ops: LadderOperators) -> ClassicalField:
    """
    Classical field of a pure state: xi_m = <x|A_m|x> / <x|x>.

    Args:
        x: Projective point
        ops: Ladder operators on the same space

    Returns:
        ClassicalField
    """
    return ClassicalField(batch_expectation_fields(x.representative[None, :], ops)[0])


def creation_expectation(x: ProjectivePoint, ops: LadderOperators) -> ClassicalField:
    """<x|C_m|x> / <x|x>; the complex conjugate of expectation_field(x)."""
    return ClassicalField(batch_expectation_fields(x.representative[None, :], ops, creation=True)[0])


def mean_photon_number(x: ProjectivePoint, ops: LadderOperators) -> float:
    """Expected total photon number <x|sum_m C_m A_m|x>."""
    vec = x.representative
    _check_ops(vec.shape[0], ops)
    return float(np.sum(ops.space.total_numbers() * np.abs(vec) ** 2))


def block_sums(w: WeightedBatch, values: np.ndarray,
               n_blocks: int = DEFAULT_BLOCKS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-block weighted sums of per-point values, in index order.

    Args:
        w: Weighted batch
        values: Array of shape (count, ...)
        n_blocks: Number of jackknife blocks

    Returns:
        (numerators of shape (K, ...), weight sums of shape (K,))
    """
    weights = w.scaled_weights()
    values = np.asarray(values)
    slices = block_slices(w.count, n_blocks)
    numerators = np.stack([np.tensordot(weights[s], values[s], axes=(0, 0)) for s in slices])
    denominators = np.array([weights[s].sum() for s in slices])
    return numerators, denominators


def projector_block_sums(w: WeightedBatch,
                         n_blocks: int = DEFAULT_BLOCKS) -> Tuple[np.ndarray, np.ndarray]:
    """Per-block weighted sums of |x><x|, shape (K, d, d)."""
    weights = w.scaled_weights()
    points = w.batch.points
    slices = block_slices(w.count, n_blocks)
    numerators = np.stack([
        points[s].T @ (weights[s, None] * points[s].conj()) for s in slices
    ])
    denominators = np.array([weights[s].sum() for s in slices])
    return numerators, denominators


def weighted_average(w: WeightedBatch, values: np.ndarray,
                     n_blocks: int = DEFAULT_BLOCKS) -> Tuple[np.ndarray, np.ndarray]:
    """Self-normalized weighted mean of per-point values and its jackknife error."""
    numerators, denominators = block_sums(w, values, n_blocks)
    return ratio_jackknife(numerators, denominators)


def density_matrix_mc(w: WeightedBatch, ess_threshold: float = DEFAULT_ESS_THRESHOLD,
                      n_blocks: int = DEFAULT_BLOCKS) -> DensityMatrix:
    """
    Ensemble density matrix: weighted average of the projectors |x><x|.

    Args:
        w: Weighted batch
        ess_threshold: Minimum ESS as a fraction of the batch size
        n_blocks: Number of jackknife blocks for the per-entry standard error

    Returns:
        DensityMatrix with per-entry stderr

    Raises:
        DegenerateWeightsError: If ESS is below threshold
    """
    require_ess(w, ess_threshold)
    numerators, denominators = projector_block_sums(w, n_blocks)
    rho, stderr = ratio_jackknife(numerators, denominators)
    return DensityMatrix(rho=rho, stderr=stderr)


def ensemble_expectation(w: WeightedBatch, op: np.ndarray,
                         ess_threshold: float = DEFAULT_ESS_THRESHOLD,
                         n_blocks: int = DEFAULT_BLOCKS) -> ScalarEstimate:
    """
    Ensemble expectation of a fixed matrix: weighted average of <x|op|x>.

    Args:
        w: Weighted batch
        op: Complex d x d matrix
        ess_threshold: Minimum ESS as a fraction of the batch size
        n_blocks: Number of jackknife blocks

    Returns:
        ScalarEstimate

    Raises:
        DegenerateWeightsError: If ESS is below threshold
        DimensionMismatchError: If op does not act on the batch's space
    """
    require_ess(w, ess_threshold)
    op = np.asarray(op, dtype=complex)
    points = w.batch.points
    if op.shape != (points.shape[1], points.shape[1]):
        raise DimensionMismatchError(f"Operator shape {op.shape} vs dimension {points.shape[1]}")
    values = np.einsum('ij,ij->i', points.conj(), points @ op.T)
    value, stderr = weighted_average(w, values, n_blocks)
    return ScalarEstimate(value=complex(value), stderr=float(stderr))
