"""
Truncated Fock spaces and their projective spaces.

Provides the occupation basis, ladder operators and Fubini-Study sampling.
"""

from .fock import (
    ModeSpace,
    FockVector,
    LadderOperators,
    CommutatorDefect,
    build_basis,
    ladder_matrices,
    inner_product,
    commutator_defect,
)
from .projective import (
    ProjectivePoint,
    SampleBatch,
    sample_uniform,
    fs_distance,
    haar_unitary,
    dump_batch,
)

__all__ = [
    'ModeSpace',
    'FockVector',
    'LadderOperators',
    'CommutatorDefect',
    'build_basis',
    'ladder_matrices',
    'inner_product',
    'commutator_defect',
    'ProjectivePoint',
    'SampleBatch',
    'sample_uniform',
    'fs_distance',
    'haar_unitary',
    'dump_batch',
]
