"""
Projective Space Module
Points of projective Fock space and deterministic Fubini-Study sampling.

The Fubini-Study volume is normalized to a probability measure, so the
uniform density is 1 and every entropy is relative to it. Uniform points
are normalized standard complex Gaussian vectors. Point i is drawn from a
Philox counter-based stream keyed by (seed, i // chunk_size), so a batch is
a pure function of (seed, count, d) whatever the number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from utils.data_export import CSV_FLOAT_FORMAT, points_frame
from utils.errors import DimensionMismatchError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
DEFAULT_CHUNK_SIZE = 4096
# High key word reserved for unitaries; sampling would need 2^76 points to reach it.
HAAR_STREAM = 2 ** 64 - 1


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """Unit-norm representative of a ray in the truncated Fock space."""

    representative: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.representative, dtype=complex).ravel()
        if abs(np.linalg.norm(vec) - 1.0) > NORM_TOLERANCE:
            raise ValueError("Projective point representative must have unit norm")
        vec.setflags(write=False)
        object.__setattr__(self, 'representative', vec)

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> 'ProjectivePoint':
        """Normalize any nonzero vector onto its ray."""
        vec = np.asarray(vector, dtype=complex).ravel()
        norm = np.linalg.norm(vec)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("Cannot build a projective point from a zero or non-finite vector")
        return cls(vec / norm)

    @property
    def dimension(self) -> int:
        return self.representative.shape[0]


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """
    Ordered Fubini-Study-uniform points stored as rows of a (count, d) array.

    Attributes:
        points: Unit-norm representatives, row i is point i
        seed: Stream key the batch was generated from
        count: Number of points
    """

    points: np.ndarray
    seed: int
    count: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim != 2 or pts.shape[0] != self.count:
            raise ValueError(f"Batch points must have shape ({self.count}, d)")
        pts.setflags(write=False)
        object.__setattr__(self, 'points', pts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def point(self, i: int) -> ProjectivePoint:
        return ProjectivePoint(self.points[i])

    def __iter__(self) -> Iterator[ProjectivePoint]:
        for i in range(self.count):
            yield self.point(i)

    def __len__(self) -> int:
        return self.count


def _chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    # Philox takes a 128-bit key: low word the seed, high word the chunk index.
    return np.random.Generator(np.random.Philox(key=int(seed) + (int(chunk) << 64)))


def _sample_chunk(d: int, seed: int, chunk: int, chunk_size: int) -> np.ndarray:
    rng = _chunk_generator(seed, chunk)
    real = rng.standard_normal((chunk_size, d))
    imag = rng.standard_normal((chunk_size, d))
    z = real + 1j * imag
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_uniform(d: int, seed: int, count: int, workers: int = 1,
                   chunk_size: int = DEFAULT_CHUNK_SIZE) -> SampleBatch:
    """
    Draw `count` independent Fubini-Study-uniform points in dimension d.

    Args:
        d: Fock space dimension (>= 2)
        seed: Unsigned 64-bit stream key
        count: Number of points (>= 1)
        workers: Worker threads; never changes the output
        chunk_size: Points per counter-keyed chunk; part of the stream definition

    Returns:
        SampleBatch
    """
    if d < 2:
        raise ValueError(f"Sampling needs dimension >= 2, got {d}")
    if count < 1:
        raise ValueError(f"Sample count must be >= 1, got {count}")
    if not 0 <= seed < 2 ** 64:
        raise ValueError("Seed must be an unsigned 64-bit integer")

    n_chunks = -(-count // chunk_size)
    chunks = range(n_chunks)

    def work(chunk: int) -> np.ndarray:
        return _sample_chunk(d, seed, chunk, chunk_size)

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(work, chunks))
    else:
        blocks = [work(c) for c in chunks]

    points = np.concatenate(blocks, axis=0)[:count]
    logger.debug(f"Sampled {count} points in CP^{d - 1} (seed={seed}, workers={workers})")
    return SampleBatch(points=points, seed=seed, count=count)


def haar_unitary(d: int, seed: int) -> np.ndarray:
    """Haar-random d x d unitary from the QR decomposition of a complex Gaussian matrix."""
    rng = _chunk_generator(seed, HAAR_STREAM)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases[None, :]


PointLike = Union[ProjectivePoint, np.ndarray]


def _rep(x: PointLike) -> np.ndarray:
    if isinstance(x, ProjectivePoint):
        return x.representative
    vec = np.asarray(x, dtype=complex).ravel()
    return vec / np.linalg.norm(vec)


def fs_distance(x: PointLike, y: PointLike) -> float:
    """
    Fubini-Study distance arccos |<x|y>| between two rays.

    Raises:
        DimensionMismatchError: If the points live in different dimensions
    """
    a, b = _rep(x), _rep(y)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Points of dimension {a.size} and {b.size}")
    overlap = min(1.0, abs(np.vdot(a, b)))
    return float(np.arccos(overlap))


def dump_batch(batch: SampleBatch, output_path: Union[str, Path]) -> Path:
    """
    Write a batch for debugging: CSV for .csv paths, numpy binary otherwise.

    Args:
        batch: Sample batch
        output_path: Destination (.csv or .npy)

    Returns:
        Path written
    """
    output_path = Path(output_path)
    if output_path.suffix == '.csv':
        points_frame(batch.points).to_csv(output_path, index=False, float_format=CSV_FLOAT_FORMAT)
    else:
        np.save(output_path, np.asarray(batch.points))
    logger.info(f"Dumped {batch.count} points to {output_path}")
    return output_path
