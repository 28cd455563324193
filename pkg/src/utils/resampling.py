"""
Resampling Utilities
Block jackknife errors and effective sample size for weighted Monte Carlo batches.

All reductions run over blocks in index order, so results do not depend on
how the batch was produced.
"""

import logging
from typing import Callable, List, Tuple

import numpy as np
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

DEFAULT_BLOCKS = 20


def block_slices(count: int, n_blocks: int = DEFAULT_BLOCKS) -> List[slice]:
    """
    Split the index range [0, count) into contiguous, near-equal blocks.

    Args:
        count: Number of samples
        n_blocks: Requested number of blocks (capped at count)

    Returns:
        List of slices in index order
    """
    n_blocks = max(1, min(n_blocks, count))
    edges = np.linspace(0, count, n_blocks + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def ess_from_log_weights(log_weights: np.ndarray) -> float:
    """
    Effective sample size (sum w)^2 / sum w^2 from unnormalized log weights.

    Args:
        log_weights: Unnormalized log importance weights

    Returns:
        Effective sample size in [1, count]
    """
    log_weights = np.asarray(log_weights, dtype=float)
    return float(np.exp(2.0 * logsumexp(log_weights) - logsumexp(2.0 * log_weights)))


def jackknife(leave_out: np.ndarray, full: np.ndarray) -> np.ndarray:
    """
    Jackknife standard error from leave-one-block-out estimates.

    Args:
        leave_out: Array of shape (K, ...) with the K leave-out estimates
        full: Full-sample estimate (unused for the spread, kept for shape checks)

    Returns:
        Standard error with the shape of `full` (real, |.| for complex estimates)
    """
    leave_out = np.asarray(leave_out)
    n_blocks = leave_out.shape[0]
    if n_blocks < 2:
        logger.warning("Jackknife needs at least 2 blocks; reporting zero error")
        return np.zeros(np.shape(full))
    centre = leave_out.mean(axis=0)
    spread = np.sum(np.abs(leave_out - centre) ** 2, axis=0)
    return np.sqrt((n_blocks - 1) / n_blocks * spread)


def ratio_jackknife(numerators: np.ndarray, denominators: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Self-normalized estimate sum(num)/sum(den) and its block jackknife error.

    Args:
        numerators: Per-block weighted sums, shape (K, ...)
        denominators: Per-block weight sums, shape (K,)

    Returns:
        (estimate, standard error)
    """
    numerators = np.asarray(numerators)
    denominators = np.asarray(denominators, dtype=float)
    total_num = numerators.sum(axis=0)
    total_den = denominators.sum()
    estimate = total_num / total_den

    expand = (slice(None),) + (None,) * (numerators.ndim - 1)
    rest_den = total_den - denominators
    if numerators.shape[0] < 2 or np.any(rest_den <= 0):
        return estimate, jackknife(np.asarray([estimate]), estimate)
    leave_out = (total_num[None, ...] - numerators) / rest_den[expand]
    return estimate, jackknife(leave_out, estimate)


def statistic_jackknife(numerators: np.ndarray, denominators: np.ndarray,
                        statistic: Callable[[np.ndarray], float]) -> Tuple[float, float]:
    """
    Jackknife a nonlinear statistic of a self-normalized estimate.

    Args:
        numerators: Per-block weighted sums, shape (K, ...)
        denominators: Per-block weight sums, shape (K,)
        statistic: Function applied to the normalized estimate

    Returns:
        (statistic of the full estimate, standard error)
    """
    numerators = np.asarray(numerators)
    denominators = np.asarray(denominators, dtype=float)
    total_num = numerators.sum(axis=0)
    total_den = denominators.sum()
    value = float(statistic(total_num / total_den))
    if numerators.shape[0] < 2:
        return value, 0.0
    leave_out = np.array([
        statistic((total_num - numerators[k]) / (total_den - denominators[k]))
        for k in range(numerators.shape[0])
    ])
    return value, float(jackknife(leave_out, np.float64(value)))
