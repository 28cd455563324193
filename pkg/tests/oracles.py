"""
Deterministic reference values for the Monte Carlo estimators.

On CP^1 (one mode, cutoff 1) the field is sqrt(t (1 - t)) e^{i phi} with
t = |x_0|^2 uniform on [0, 1], so the phase integral of the Gibbs weight is
a modified Bessel function and the partition function reduces to a 1-D
quadrature. On CP^2 (one mode, cutoff 2) the field is a sum of two terms
with independent phases, giving a product of Bessel functions integrated
over the probability simplex.
"""

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.special import i0, i1, iv, roots_hermite


def line_log_z(mu: complex) -> float:
    """log Z(mu) on CP^1."""
    a = abs(mu)
    value, _ = quad(lambda t: i0(2.0 * a * np.sqrt(t * (1.0 - t))), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return float(np.log(value))


def line_mean_field(mu: complex) -> complex:
    """Gibbs mean field on CP^1."""
    a = abs(mu)
    if a == 0:
        return 0j

    def r(t):
        return np.sqrt(t * (1.0 - t))

    num, _ = quad(lambda t: r(t) * i1(2.0 * a * r(t)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    den, _ = quad(lambda t: i0(2.0 * a * r(t)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return complex(-np.conj(mu) / a * num / den)


def plane_log_z(mu: complex) -> float:
    """log Z(mu) on CP^2; the uniform density on the simplex is 2."""
    a = abs(mu)

    def integrand(p1, p0):
        p2 = max(0.0, 1.0 - p0 - p1)
        return i0(2.0 * a * np.sqrt(p0 * p1)) * i0(2.0 * np.sqrt(2.0) * a * np.sqrt(p1 * p2))

    value, _ = dblquad(integrand, 0.0, 1.0, lambda p0: 0.0, lambda p0: 1.0 - p0,
                       epsabs=1e-12, epsrel=1e-12)
    return float(np.log(2.0 * value))


def line_field_variance() -> float:
    """Variance of Re xi (and of Im xi) under the uniform measure on CP^1: E[t(1-t)] / 2."""
    return 1.0 / 12.0


def taylor_expm(mat: np.ndarray, terms: int = 80) -> np.ndarray:
    """exp(mat) by its power series; only for small-norm matrices."""
    result = np.eye(mat.shape[0], dtype=complex)
    term = np.eye(mat.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ mat / k
        result = result + term
    return result


def single_mode_feasibility_bound(cutoff: int) -> float:
    """Largest eigenvalue of (A + C)/2 on N+1 levels: the top Hermite root over sqrt 2."""
    roots, _ = roots_hermite(cutoff + 1)
    return float(np.max(roots) / np.sqrt(2.0))


def plane_moments(mu: float):
    """
    Gibbs mean field and covariance of (Re xi, Im xi) on CP^2 for real mu.

    With r1 = sqrt(p0 p1), r2 = sqrt(2 p1 p2) and independent phases, each
    phase integral is a modified Bessel function of z = 2 mu r.
    """
    a = float(mu)

    def c2(z):
        return 0.5 * (i0(z) + iv(2, z))

    def s2(z):
        return 0.5 * (i0(z) - iv(2, z))

    def simplex(fn):
        def integrand(p1, p0):
            p2 = max(0.0, 1.0 - p0 - p1)
            r1, r2 = np.sqrt(p0 * p1), np.sqrt(2.0 * p1 * p2)
            return fn(r1, r2, 2.0 * a * r1, 2.0 * a * r2)

        value, _ = dblquad(integrand, 0.0, 1.0, lambda p0: 0.0, lambda p0: 1.0 - p0,
                           epsabs=1e-12, epsrel=1e-12)
        return value

    z0 = simplex(lambda r1, r2, z1, z2: i0(z1) * i0(z2))
    re = -simplex(lambda r1, r2, z1, z2: r1 * i1(z1) * i0(z2) + r2 * i0(z1) * i1(z2)) / z0
    re2 = simplex(lambda r1, r2, z1, z2: r1 ** 2 * c2(z1) * i0(z2) + r2 ** 2 * i0(z1) * c2(z2)
                  + 2.0 * r1 * r2 * i1(z1) * i1(z2)) / z0
    im2 = simplex(lambda r1, r2, z1, z2: r1 ** 2 * s2(z1) * i0(z2) + r2 ** 2 * i0(z1) * s2(z2)) / z0
    cov = np.array([[re2 - re ** 2, 0.0], [0.0, im2]])
    return complex(re), cov
