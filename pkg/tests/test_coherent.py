"""Tests for truncated coherent states and level-surface probes."""

import numpy as np
import pytest
from scipy.stats import poisson

from ensemble import (
    coherent_point,
    eigen_residual,
    expectation_field,
    foliation_probe,
    mean_photon_number,
    zero_field_family,
)
from ensemble.coherent import project_to_surface
from ensemble.fields import ClassicalField
from hilbert import build_basis, ladder_matrices, sample_uniform
from utils import InfeasibleTargetError


class TestCoherentPoint:

    def test_vacuum(self, qutrit_space):
        point = coherent_point(0.0, qutrit_space)
        np.testing.assert_allclose(point.point.representative, [1.0, 0.0, 0.0])
        assert point.truncation_tail == 0.0
        assert point.field_deviation_bound() == 0.0

    @pytest.mark.parametrize("xi,cutoff", [(0.5, 4), (0.3 - 0.8j, 6), (1.2j, 10)])
    def test_field_deviation_is_exact(self, xi, cutoff):
        space = build_basis(1, cutoff)
        ops = ladder_matrices(space)
        point = coherent_point(xi, space)
        deviation = abs(expectation_field(point.point, ops).xi[0] - xi)
        assert deviation == pytest.approx(point.field_deviation_bound(), rel=1e-9, abs=1e-15)

    def test_truncation_tail_is_poisson(self):
        space = build_basis(1, 5)
        point = coherent_point(0.9, space)
        assert point.truncation_tail == pytest.approx(poisson.sf(5, 0.81))

    def test_eigen_residual_shrinks_with_cutoff(self):
        residuals = []
        for cutoff in (3, 6, 12):
            space = build_basis(1, cutoff)
            point = coherent_point(0.7, space)
            residuals.append(eigen_residual(point.point, 0.7, ladder_matrices(space)))
        assert residuals[0] > residuals[1] > residuals[2]
        assert residuals[2] < 1e-5

    def test_two_mode_amplitudes_factorize(self):
        space = build_basis(2, 6)
        ops = ladder_matrices(space)
        point = coherent_point([0.3, -0.2j], space)
        np.testing.assert_allclose(expectation_field(point.point, ops).xi, [0.3, -0.2j], atol=1e-4)

    def test_mode_mismatch(self, qutrit_space):
        with pytest.raises(ValueError):
            coherent_point([0.1, 0.2], qutrit_space)


class TestZeroFieldFamily:

    def test_all_members_have_zero_field(self, two_mode_ops):
        family = zero_field_family(two_mode_ops.space)
        assert len(family) >= 3
        for x in family:
            np.testing.assert_allclose(expectation_field(x, two_mode_ops).xi, 0.0, atol=1e-15)

    def test_includes_photon_rich_states(self, qutrit_ops):
        family = zero_field_family(qutrit_ops.space)
        assert max(mean_photon_number(x, qutrit_ops) for x in family) == pytest.approx(2.0)


class TestProjection:

    def test_lands_on_surface(self, qutrit_ops):
        target = ClassicalField.of([0.25 - 0.1j])
        start = sample_uniform(3, seed=4, count=1).points[0]
        vec = project_to_surface(start, target, qutrit_ops)
        assert np.linalg.norm(vec) == pytest.approx(1.0)
        lead = vec[np.flatnonzero(np.abs(vec) > 1e-12)[0]]
        assert lead.imag == pytest.approx(0.0, abs=1e-15)
        assert lead.real > 0
        field = vec.conj() @ (qutrit_ops.annihilation[0] @ vec)
        assert abs(field - target.xi[0]) < 1e-8


class TestFoliationProbe:

    def test_zero_field_surface(self, qutrit_space, qutrit_ops):
        report = foliation_probe(0.0, qutrit_space, qutrit_ops, count=20, seed=1)
        assert len(report.points) >= 3
        assert report.coherent_on_surface
        assert report.log_weights_constant
        assert report.coherent_minimizes_photon_number
        assert report.points[0].source == 'coherent'
        assert any(p.source == 'constructed' for p in report.points)

    def test_constructed_log_weights_are_exactly_equal(self, qutrit_space, qutrit_ops):
        report = foliation_probe(0.0, qutrit_space, qutrit_ops, count=10, seed=3)
        assert report.exact_log_weight_spread == 0.0
        assert report.constructed_log_weights_equal
        # Projected points only meet the surface to within the acceptance.
        assert report.log_weight_spread <= report.log_weight_bound

    def test_nonzero_field_has_no_constructed_family(self, qutrit_space, qutrit_ops):
        report = foliation_probe(0.3, qutrit_space, qutrit_ops, count=5, seed=1)
        assert report.exact_log_weight_spread is None
        assert not report.constructed_log_weights_equal

    def test_nonzero_field_surface(self):
        space = build_basis(1, 4)
        ops = ladder_matrices(space)
        report = foliation_probe(0.2, space, ops, count=60, seed=2, workers=2)
        assert sum(p.source == 'projected' for p in report.points) >= 50
        assert report.coherent_on_surface
        assert report.log_weights_constant
        assert report.coherent_minimizes_photon_number
        assert report.distinct_coherent_points == 0
        assert report.photon_numbers().min() == pytest.approx(report.points[0].photon_number)

    def test_off_surface_coherent_point_is_not_minimal(self, qutrit_space, qutrit_ops):
        # At cutoff 2 the truncated coherent point of 0.8 misses its field.
        report = foliation_probe(0.8, qutrit_space, qutrit_ops, count=10, seed=0)
        assert report.points[0].field_residual > 0.05
        assert not report.coherent_on_surface
        assert not report.coherent_minimizes_photon_number

    def test_workers_do_not_change_results(self, qutrit_space, qutrit_ops):
        serial = foliation_probe(0.1j, qutrit_space, qutrit_ops, count=10, seed=5, workers=1)
        threaded = foliation_probe(0.1j, qutrit_space, qutrit_ops, count=10, seed=5, workers=3)
        np.testing.assert_array_equal(serial.photon_numbers(), threaded.photon_numbers())

    def test_report_serializes(self, qutrit_space, qutrit_ops):
        doc = foliation_probe(0.0, qutrit_space, qutrit_ops, count=5, seed=0).to_dict()
        assert doc['cutoff'] == 2
        assert len(doc['test_mus']) == 5
        assert {'log_weight_spread', 'log_weight_bound', 'points', 'failures'} <= set(doc)

    def test_infeasible_field(self, qutrit_space, qutrit_ops):
        with pytest.raises(InfeasibleTargetError):
            foliation_probe(1.5, qutrit_space, qutrit_ops, count=5)
