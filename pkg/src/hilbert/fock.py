"""
Fock Space Module
Truncated multi-mode bosonic Fock spaces, their inner product and ladder operators.

The space keeps every occupation state |n_1, ..., n_M> with total photon
number at most N, so it is the rank-graded Fock sum cut at rank N and has
dimension C(N+M, M). Symmetric tensors of rank k correspond to the
occupation states with total number k: the tensor components are absorbed
into orthonormal occupation amplitudes (the usual sqrt(k!/prod n_m!)
factor), so the graded inner product reduces to the Hermitian dot product.
"""

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from utils.errors import CapacityError, DimensionMismatchError

logger = logging.getLogger(__name__)

DEFAULT_MAX_DIMENSION = 5000

Occupation = Tuple[int, ...]


@dataclass(frozen=True)
class ModeSpace:
    """
    Truncated Fock space over M modes with total photon-number cutoff N.

    Basis states are graded by total photon number (vacuum first); inside a
    grade they are ordered lexicographically from the highest occupation of
    the first mode down, e.g. (1,0) before (0,1).
    """

    num_modes: int
    cutoff: int
    basis: Tuple[Occupation, ...]
    index: Dict[Occupation, int] = field(compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def occupations(self) -> np.ndarray:
        """Basis occupations as an integer array of shape (d, M)."""
        return np.array(self.basis, dtype=int).reshape(self.dimension, self.num_modes)

    def total_numbers(self) -> np.ndarray:
        """Total photon number of each basis state."""
        return self.occupations().sum(axis=1)

    def sub_cutoff_indices(self) -> np.ndarray:
        """Indices of basis states with total photon number below the cutoff."""
        return np.flatnonzero(self.total_numbers() < self.cutoff)

    def basis_vector(self, occupation: Occupation) -> np.ndarray:
        """Unit amplitude vector of one occupation state."""
        vec = np.zeros(self.dimension, dtype=complex)
        vec[self.index[tuple(occupation)]] = 1.0
        return vec


def _compositions(total: int, modes: int) -> Iterator[Occupation]:
    """Occupations of `modes` modes summing to `total`, first mode descending."""
    if modes == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, modes - 1):
            yield (first,) + rest


def build_basis(num_modes: int, cutoff: int, max_dimension: int = DEFAULT_MAX_DIMENSION) -> ModeSpace:
    """
    Enumerate the graded occupation basis of a truncated Fock space.

    Args:
        num_modes: Number of modes M (>= 1)
        cutoff: Maximum total photon number N (>= 0)
        max_dimension: Capacity cap on C(N+M, M)

    Returns:
        ModeSpace with deterministic graded-lexicographic ordering

    Raises:
        ValueError: If M < 1 or N < 0
        CapacityError: If the dimension exceeds max_dimension
    """
    if num_modes < 1:
        raise ValueError(f"Number of modes must be >= 1, got {num_modes}")
    if cutoff < 0:
        raise ValueError(f"Cutoff must be >= 0, got {cutoff}")

    dimension = comb(cutoff + num_modes, num_modes)
    if dimension > max_dimension:
        raise CapacityError(dimension, max_dimension)

    basis = tuple(occ for total in range(cutoff + 1) for occ in _compositions(total, num_modes))
    index = {occ: i for i, occ in enumerate(basis)}
    logger.debug(f"Built Fock basis M={num_modes}, N={cutoff}, d={dimension}")
    return ModeSpace(num_modes=num_modes, cutoff=cutoff, basis=basis, index=index)


@dataclass(frozen=True, eq=False)
class FockVector:
    """Amplitudes in the occupation basis; not required to be normalized."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if not np.all(np.isfinite(amps)):
            raise ValueError("Fock vector amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, 'amplitudes', amps)

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


VectorLike = Union[FockVector, np.ndarray, List[complex]]


def _amplitudes(vector: VectorLike) -> np.ndarray:
    if isinstance(vector, FockVector):
        return vector.amplitudes
    return np.asarray(vector, dtype=complex).ravel()


def inner_product(phi: VectorLike, psi: VectorLike) -> complex:
    """
    Hermitian inner product <phi|psi>, conjugate-linear in phi.

    Raises:
        DimensionMismatchError: If the vectors have different lengths
    """
    a, b = _amplitudes(phi), _amplitudes(psi)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Inner product of vectors with sizes {a.size} and {b.size}")
    return complex(np.vdot(a, b))


@dataclass(frozen=True, eq=False)
class LadderOperators:
    """Dense annihilation and creation matrices, one pair per mode."""

    space: ModeSpace
    annihilation: Tuple[np.ndarray, ...]
    creation: Tuple[np.ndarray, ...]

    @property
    def num_modes(self) -> int:
        return len(self.annihilation)

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def number_operator(self, mode: int) -> np.ndarray:
        """C_m A_m, diagonal with the occupations n_m."""
        return self.creation[mode] @ self.annihilation[mode]

    def total_number_operator(self) -> np.ndarray:
        return np.diag(self.space.total_numbers().astype(complex))


def ladder_matrices(space: ModeSpace) -> LadderOperators:
    """
    Build A_m with <n - e_m| A_m |n> = sqrt(n_m) and C_m = A_m^dagger.

    Args:
        space: Truncated Fock space

    Returns:
        LadderOperators with read-only matrices
    """
    d = space.dimension
    annihilation = []
    creation = []
    for mode in range(space.num_modes):
        a = np.zeros((d, d), dtype=complex)
        for col, occ in enumerate(space.basis):
            if occ[mode] == 0:
                continue
            lowered = occ[:mode] + (occ[mode] - 1,) + occ[mode + 1:]
            a[space.index[lowered], col] = np.sqrt(occ[mode])
        c = a.conj().T.copy()
        a.setflags(write=False)
        c.setflags(write=False)
        annihilation.append(a)
        creation.append(c)
    return LadderOperators(space=space, annihilation=tuple(annihilation), creation=tuple(creation))


@dataclass(frozen=True)
class CommutatorDefect:
    """Operator norms of [A_m, C_m'] - delta I below the cutoff and on the full space."""

    restricted: float
    unrestricted: float


def commutator_defect(ops: LadderOperators, mode: int, other: int) -> CommutatorDefect:
    """
    Measure how far the truncated ladder matrices violate the commutation relation.

    Args:
        ops: Ladder operators
        mode: Annihilation mode m
        other: Creation mode m'

    Returns:
        CommutatorDefect with spectral norms on the sub-cutoff block and on the full space
    """
    a = ops.annihilation[mode]
    c = ops.creation[other]
    defect = a @ c - c @ a
    if mode == other:
        defect = defect - np.eye(ops.dimension)

    keep = ops.space.sub_cutoff_indices()
    block = defect[np.ix_(keep, keep)]
    restricted = float(np.linalg.norm(block, 2)) if keep.size else 0.0
    unrestricted = float(np.linalg.norm(defect, 2))
    return CommutatorDefect(restricted=restricted, unrestricted=unrestricted)
