"""
Coherent States Module
Truncated coherent states, the annihilation eigenvalue relation, and a
numerical probe of the level surfaces {x : xi(x) = field}.

The Gibbs density is constant on every level surface, and each surface
meets the coherent manifold at the coherent state of its field. The probe
checks the strongest consequences that are testable on a truncated space:
equal log weights across the surface, the coherent point on the surface,
and the coherent point minimizing the mean photon number there.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import least_squares
from scipy.special import gammaln
from scipy.stats import poisson

from hilbert.fock import LadderOperators, ModeSpace
from hilbert.projective import ProjectivePoint, fs_distance, sample_uniform
from utils.errors import InfeasibleTargetError, ProjectionError

from .fields import ClassicalField, batch_expectation_fields, mean_photon_number
from .maxent import ChemicalPotential, as_field, check_modes, feasibility_bound, field_log_weights

logger = logging.getLogger(__name__)

COHERENT_MATCH = 1e-6
PHASE_GAUGE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class CoherentPoint:
    """
    Normalized truncation of a coherent state.

    Attributes:
        field: Eigenvalue the untruncated state satisfies
        point: Retained amplitudes, normalized
        truncation_tail: Squared norm lost to the cutoff, as a fraction
        cutoff: Total photon-number cutoff
    """

    field: ClassicalField
    point: ProjectivePoint
    truncation_tail: float
    cutoff: int

    def field_deviation_bound(self) -> float:
        """
        Exact norm of expectation_field(point) - field.

        The truncated state reproduces xi_m P(T <= N-1) / P(T <= N) with T
        Poisson of mean |xi|^2, so the deviation is |xi| P(T = N) / P(T <= N).
        """
        lam = self.field.norm() ** 2
        if lam == 0:
            return 0.0
        return float(self.field.norm() * poisson.pmf(self.cutoff, lam) / poisson.cdf(self.cutoff, lam))


def coherent_point(field_value: Union[ClassicalField, complex, Sequence[complex]],
                   space: ModeSpace) -> CoherentPoint:
    """
    Truncated coherent state with amplitudes prod_m xi_m^n_m / sqrt(n_m!).

    Args:
        field_value: Classical field
        space: Truncated Fock space

    Returns:
        CoherentPoint with the Poisson tail of the discarded amplitudes
    """
    xi = as_field(field_value)
    if xi.num_modes != space.num_modes:
        raise ValueError(f"Field has {xi.num_modes} modes, space has {space.num_modes}")
    occ = space.occupations()
    log_norm = -0.5 * gammaln(occ + 1).sum(axis=1)
    amplitudes = np.exp(log_norm) * np.prod(np.power(xi.xi[None, :], occ), axis=1)
    tail = float(poisson.sf(space.cutoff, xi.norm() ** 2))
    return CoherentPoint(
        field=xi,
        point=ProjectivePoint.from_vector(amplitudes),
        truncation_tail=tail,
        cutoff=space.cutoff,
    )


def eigen_residual(x: ProjectivePoint, field_value: Union[ClassicalField, complex, Sequence[complex]],
                   ops: LadderOperators) -> float:
    """
    Eigenvalue defect sqrt(sum_m |A_m psi - xi_m psi|^2) for the unit representative.

    Zero iff psi is a joint eigenvector of every A_m.
    """
    xi = as_field(field_value)
    check_modes(xi.num_modes, ops, "Field")
    psi = x.representative
    total = 0.0
    for m, a in enumerate(ops.annihilation):
        total += float(np.linalg.norm(a @ psi - xi.xi[m] * psi) ** 2)
    return float(np.sqrt(total))


def zero_field_family(space: ModeSpace) -> List[ProjectivePoint]:
    """
    States with vanishing field: every basis state, and equal superpositions of
    basis states whose total photon numbers differ by at least two.
    """
    totals = space.total_numbers()
    family = [ProjectivePoint(space.basis_vector(occ)) for occ in space.basis]
    phases = np.exp(1j * np.linspace(0.0, np.pi, 3))
    for i in range(space.dimension):
        for j in range(i + 1, space.dimension):
            if abs(int(totals[i]) - int(totals[j])) < 2:
                continue
            for phase in phases:
                vec = np.zeros(space.dimension, dtype=complex)
                vec[i] = 1.0
                vec[j] = phase
                family.append(ProjectivePoint.from_vector(vec))
    return family


def _fix_gauge(vec: np.ndarray) -> np.ndarray:
    vec = vec / np.linalg.norm(vec)
    lead = np.flatnonzero(np.abs(vec) > PHASE_GAUGE_FLOOR)
    if lead.size:
        vec = vec * (abs(vec[lead[0]]) / vec[lead[0]])
    return vec


def project_to_surface(start: np.ndarray, target: ClassicalField,
                       ops: LadderOperators) -> np.ndarray:
    """
    Trust-region Gauss-Newton on |xi(z) - target|^2 over unnormalized z.

    Args:
        start: Initial amplitudes
        target: Field defining the level surface
        ops: Ladder operators

    Returns:
        Unit representative with the first nonzero amplitude real positive
    """
    d = ops.dimension
    t_real = target.to_real()

    def residual(z: np.ndarray) -> np.ndarray:
        psi = z[:d] + 1j * z[d:]
        xi = batch_expectation_fields(psi[None, :], ops)[0]
        return np.concatenate([xi.real, xi.imag]) - t_real

    def jacobian(z: np.ndarray) -> np.ndarray:
        psi = z[:d] + 1j * z[d:]
        norm = np.vdot(psi, psi).real
        rows = []
        for a in ops.annihilation:
            xi = np.vdot(psi, a @ psi) / norm
            forward, backward = a @ psi, np.conj(a.conj().T @ psi)
            d_re = (forward + backward - 2.0 * xi * psi.real) / norm
            d_im = (-1j * forward + 1j * backward - 2.0 * xi * psi.imag) / norm
            rows.append(np.concatenate([d_re, d_im]))
        rows = np.array(rows)
        return np.concatenate([rows.real, rows.imag], axis=0)

    z0 = np.concatenate([start.real, start.imag])
    result = least_squares(residual, z0, jac=jacobian, method='trf', xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return _fix_gauge(result.x[:d] + 1j * result.x[d:])


@dataclass(frozen=True, eq=False)
class SurfacePoint:
    """Point found on a level surface."""

    index: int
    source: str
    representative: np.ndarray
    field_residual: float
    photon_number: float
    eigen_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'index': self.index,
            'source': self.source,
            'representative': [[float(z.real), float(z.imag)] for z in self.representative],
            'field_residual': self.field_residual,
            'photon_number': self.photon_number,
            'eigen_residual': self.eigen_residual,
        }


@dataclass(frozen=True, eq=False)
class FoliationReport:
    """
    Outcome of a level-surface probe.

    Attributes:
        field: Field of the surface
        coherent: Truncated coherent point of the field
        points: Surface points (coherent, constructed, projected)
        failures: Start indices whose projection was rejected
        test_mus: Chemical potentials used for the constancy check
        log_weight_spread: Max over mus of the log-weight range across points
        log_weight_bound: Spread allowed by the accepted field residuals
        coherent_on_surface: Coherent point within acceptance of the surface
        coherent_minimizes_photon_number: No surface point has fewer photons
        distinct_coherent_points: Found eigenvectors that differ from the coherent point
        exact_log_weight_spread: Log-weight range over the coherent and constructed
            points alone, None when nothing was constructed
    """

    field: ClassicalField
    coherent: CoherentPoint
    points: List[SurfacePoint]
    failures: List[int]
    test_mus: List[ChemicalPotential]
    log_weight_spread: float
    log_weight_bound: float
    coherent_on_surface: bool
    coherent_minimizes_photon_number: bool
    distinct_coherent_points: int
    acceptance: float
    exact_log_weight_spread: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def log_weights_constant(self) -> bool:
        return self.log_weight_spread <= self.log_weight_bound

    @property
    def constructed_log_weights_equal(self) -> bool:
        """Exact equality on states whose field vanishes identically; no tolerance."""
        return self.exact_log_weight_spread is not None and self.exact_log_weight_spread == 0.0

    def photon_numbers(self) -> np.ndarray:
        return np.array([p.photon_number for p in self.points])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'field': [[float(z.real), float(z.imag)] for z in self.field.xi],
            'cutoff': self.coherent.cutoff,
            'coherent': {
                'representative': [[float(z.real), float(z.imag)] for z in self.coherent.point.representative],
                'truncation_tail': self.coherent.truncation_tail,
                'field_deviation_bound': self.coherent.field_deviation_bound(),
            },
            'acceptance': self.acceptance,
            'points': [p.to_dict() for p in self.points],
            'failures': self.failures,
            'test_mus': [[[float(z.real), float(z.imag)] for z in mu.mu] for mu in self.test_mus],
            'log_weight_spread': self.log_weight_spread,
            'log_weight_bound': self.log_weight_bound,
            'log_weights_constant': self.log_weights_constant,
            'exact_log_weight_spread': self.exact_log_weight_spread,
            'constructed_log_weights_equal': self.constructed_log_weights_equal,
            'coherent_on_surface': self.coherent_on_surface,
            'coherent_minimizes_photon_number': self.coherent_minimizes_photon_number,
            'distinct_coherent_points': self.distinct_coherent_points,
            **self.extra,
        }


def foliation_probe(field_value: Union[ClassicalField, complex, Sequence[complex]],
                    space: ModeSpace, ops: LadderOperators, count: int,
                    seed: int = 0, acceptance: float = 1e-8, test_mus: int = 5,
                    workers: int = 1) -> FoliationReport:
    """
    Find points on the level surface of `field_value` and test the foliation picture.

    Args:
        field_value: Field defining the surface
        space: Truncated Fock space
        ops: Ladder operators on the space
        count: Number of random starts projected onto the surface
        seed: Seed for starts (seed) and test chemical potentials (seed + 1)
        acceptance: Maximum |xi(x) - field|^2 for an accepted point
        test_mus: Number of random chemical potentials
        workers: Threads for independent projections; results keep start order

    Returns:
        FoliationReport

    Raises:
        InfeasibleTargetError: No pure state reaches the field
        ProjectionError: No start could be projected onto the surface
    """
    target = as_field(field_value)
    check_modes(target.num_modes, ops, "Field")
    if not target.is_zero():
        bound = feasibility_bound(ops, target)
        if target.norm() >= bound:
            raise InfeasibleTargetError(target.norm(), bound, "no pure state has this field")

    coherent = coherent_point(target, space)
    starts = sample_uniform(space.dimension, seed, count).points

    def project(i: int) -> np.ndarray:
        return project_to_surface(starts[i], target, ops)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            projected = list(pool.map(project, range(count)))
    else:
        projected = [project(i) for i in range(count)]

    candidates = [('coherent', coherent.point.representative)]
    if target.is_zero():
        candidates += [('constructed', p.representative) for p in zero_field_family(space)]

    failures = []
    accepted = []
    for i, vec in enumerate(projected):
        miss = _field_miss(vec, target, ops)
        if miss ** 2 <= acceptance:
            accepted.append(('projected', vec))
        else:
            failures.append(i)
            logger.warning(f"Projection from start {i} rejected (|xi - field| = {miss:.3e})")
    if not accepted:
        raise ProjectionError(f"None of {count} starts reached the level surface within {acceptance:g}")

    points = []
    for index, (source, vec) in enumerate(candidates + accepted):
        x = ProjectivePoint.from_vector(vec)
        points.append(SurfacePoint(
            index=index,
            source=source,
            representative=x.representative,
            field_residual=_field_miss(x.representative, target, ops),
            photon_number=mean_photon_number(x, ops),
            eigen_residual=eigen_residual(x, target, ops),
        ))

    rng = np.random.Generator(np.random.Philox(key=(seed + 1) % 2 ** 64))
    mus = [ChemicalPotential(rng.standard_normal(ops.num_modes) + 1j * rng.standard_normal(ops.num_modes))
           for _ in range(test_mus)]
    reps = np.stack([p.representative for p in points])
    fields = batch_expectation_fields(reps, ops)
    spread = 0.0
    bound = 0.0
    max_miss = max(p.field_residual for p in points)
    n_exact = len(candidates)
    exact_spread = 0.0 if n_exact > 1 else None
    for mu in mus:
        lw = field_log_weights(mu, fields)
        spread = max(spread, float(lw.max() - lw.min()))
        bound = max(bound, 4.0 * mu.norm() * max_miss)
        if exact_spread is not None:
            exact_spread = max(exact_spread, float(lw[:n_exact].max() - lw[:n_exact].min()))

    coherent_entry = points[0]
    on_surface = coherent_entry.field_residual ** 2 <= acceptance
    others = [p.photon_number for p in points[1:]]
    # Off the surface the coherent point is not a competitor.
    minimizes = on_surface and (not others or coherent_entry.photon_number <= min(others) + 1e-12)
    distinct = sum(
        1 for p in points[1:]
        if p.eigen_residual < COHERENT_MATCH and fs_distance(p.representative, coherent.point) > 1e-3
    )
    report = FoliationReport(
        field=target,
        coherent=coherent,
        points=points,
        failures=failures,
        test_mus=mus,
        log_weight_spread=spread,
        log_weight_bound=bound + 1e-12,
        coherent_on_surface=on_surface,
        coherent_minimizes_photon_number=minimizes,
        distinct_coherent_points=distinct,
        acceptance=acceptance,
        exact_log_weight_spread=exact_spread,
        extra={'max_fs_distance_from_coherent': max(
            fs_distance(p.representative, coherent.point) for p in points)},
    )
    logger.info(f"Foliation probe: {len(points)} surface points, {len(failures)} failed starts")
    return report


def _field_miss(vec: np.ndarray, target: ClassicalField, ops: LadderOperators) -> float:
    xi = batch_expectation_fields(np.asarray(vec)[None, :], ops)[0]
    return float(np.linalg.norm(xi - target.xi))
