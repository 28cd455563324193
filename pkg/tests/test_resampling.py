"""Tests for block jackknife errors and effective sample size."""

import logging

import numpy as np
import pytest

from utils import block_slices, ess_from_log_weights, ratio_jackknife, statistic_jackknife
from utils.resampling import jackknife


class TestBlockSlices:

    def test_covers_range_in_order(self):
        slices = block_slices(103, 20)
        assert len(slices) == 20
        assert slices[0].start == 0
        assert slices[-1].stop == 103
        assert all(a.stop == b.start for a, b in zip(slices, slices[1:]))

    def test_caps_blocks_at_count(self):
        assert len(block_slices(5, 20)) == 5


class TestEss:

    def test_uniform_weights(self):
        assert ess_from_log_weights(np.zeros(250)) == pytest.approx(250.0)

    def test_single_dominant_weight(self):
        assert ess_from_log_weights(np.r_[0.0, np.full(99, -800.0)]) == pytest.approx(1.0)

    def test_shift_invariant(self):
        lw = np.linspace(-3, 1, 50)
        assert ess_from_log_weights(lw) == pytest.approx(ess_from_log_weights(lw + 500.0))


class TestJackknife:

    def test_constant_ratio_has_zero_error(self):
        den = np.array([1.0, 2.0, 3.0, 4.0])
        est, se = ratio_jackknife(2.5 * den, den)
        assert est == pytest.approx(2.5)
        assert se == pytest.approx(0.0, abs=1e-15)

    def test_matches_standard_error_of_the_mean(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(50, 100)).sum(axis=1)
        est, se = ratio_jackknife(values, np.full(50, 100.0))
        # Equal blocks: jackknife of the mean equals the block standard error.
        expected = values.std(ddof=1) / 100.0 / np.sqrt(50)
        assert se == pytest.approx(expected, rel=1e-10)

    def test_statistic_identity_matches_ratio(self):
        rng = np.random.default_rng(1)
        num = rng.normal(size=20)
        den = rng.uniform(1, 2, size=20)
        est, se = ratio_jackknife(num, den)
        value, stat_se = statistic_jackknife(num, den, lambda r: r)
        assert value == pytest.approx(est)
        assert stat_se == pytest.approx(se)

    def test_matrix_valued_ratio(self):
        num = np.stack([np.eye(2) * k for k in range(1, 5)])
        den = np.arange(1.0, 5.0)
        est, se = ratio_jackknife(num, den)
        np.testing.assert_allclose(est, np.eye(2))
        assert se.shape == (2, 2)

    def test_single_block_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            se = jackknife(np.array([[1.0, 2.0]]), np.array([1.0, 2.0]))
        np.testing.assert_array_equal(se, [0.0, 0.0])
        assert "at least 2 blocks" in caplog.text
