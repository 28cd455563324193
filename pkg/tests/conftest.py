"""Shared fixtures for the test suite."""

import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))
sys.path.insert(0, str(Path(__file__).parent))

from hilbert import build_basis, ladder_matrices, sample_uniform  # noqa: E402
from utils import SolverConfig  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def single_mode_space():
    """M=1, N=1: the projective line."""
    return build_basis(1, 1)


@pytest.fixture
def single_mode_ops(single_mode_space):
    return ladder_matrices(single_mode_space)


@pytest.fixture
def qutrit_space():
    """M=1, N=2: the projective plane."""
    return build_basis(1, 2)


@pytest.fixture
def qutrit_ops(qutrit_space):
    return ladder_matrices(qutrit_space)


@pytest.fixture
def two_mode_ops():
    return ladder_matrices(build_basis(2, 2))


@pytest.fixture
def line_batch():
    return sample_uniform(2, seed=2024, count=200_000)


@pytest.fixture
def plane_batch():
    return sample_uniform(3, seed=77, count=200_000)


@pytest.fixture
def solver_cfg():
    return SolverConfig(seed=5, count=100_000, tolerance=1e-3)
