"""Scalar spike-and-slab channel: moments against direct quadrature.

The independent oracle integrates the mixture posterior with an adaptive
routine that is told where the slab-probability transition sits; without the
breakpoint hints adaptive quadrature silently misses the narrow near-origin
feature at large channel precision.
"""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import logsumexp

from ecrec import (
    PriorBG,
    QuadratureError,
    log_partition_z,
    partition_z,
    posterior_mean,
    posterior_moments,
    posterior_second_moment,
    scalar_mmse,
    tilted_gaussian_expect,
)
from ecrec.denoiser import scalar_mmse_nested

PRIOR = PriorBG(rho=0.1, sigma_x2=1.0)


def _moments_by_quadrature(h, e, prior):
    """First and second posterior moments from the explicit 1-D integrals."""
    sx = math.sqrt(prior.sigma_x2)

    def tilt(x):
        return np.exp(-0.5 * e * x * x + h * x - 0.5 * (x / sx) ** 2) / (
            sx * math.sqrt(2 * math.pi)
        )

    a = e + 1.0 / prior.sigma_x2
    center, spread = h / a, 1.0 / math.sqrt(a)
    lo = min(-12.0 * sx, center - 12.0 * spread)
    hi = max(12.0 * sx, center + 12.0 * spread)
    z_slab, _ = integrate.quad(tilt, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=400)
    m1, _ = integrate.quad(lambda x: x * tilt(x), lo, hi, epsabs=1e-15, epsrel=1e-13, limit=400)
    m2, _ = integrate.quad(lambda x: x * x * tilt(x), lo, hi, epsabs=1e-15, epsrel=1e-13, limit=400)
    denom = (1.0 - prior.rho) + prior.rho * z_slab
    return prior.rho * m1 / denom, prior.rho * m2 / denom


def test_partition_function_frozen_values():
    assert partition_z(0.0, 1.0, PRIOR) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-15)
    assert partition_z(1.0, 1.0, PRIOR) == pytest.approx(0.9079430793557843, rel=1e-14)
    # log form stays finite where the plain form overflows
    assert math.isfinite(log_partition_z(1e6, 1.0, PRIOR))


def test_posterior_mean_frozen_values():
    # Verified independently by explicit quadrature of the mixture posterior.
    assert posterior_mean(1.0, 1.0, PRIOR) == pytest.approx(0.04581894910395563, rel=1e-13)
    assert posterior_second_moment(0.0, 1.0, PRIOR) == pytest.approx(
        0.036422118202974696, rel=1e-13
    )
    # Saturated slab: shrinkage becomes pure 1/(E + 1/sigma_x2) scaling.
    assert posterior_mean(1e6, 1.0, PRIOR) == pytest.approx(5e5, rel=1e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_posterior_moments_match_quadrature_grid():
    # Stated grid: h in [-10, 10], E in {0.1, 1, 100}; tolerance 1e-10.
    hs = np.linspace(-10.0, 10.0, 41)
    for e in (0.1, 1.0, 100.0):
        for h in hs:
            m_ref, q_ref = _moments_by_quadrature(float(h), e, PRIOR)
            assert posterior_mean(float(h), e, PRIOR) == pytest.approx(m_ref, abs=1e-10)
            assert posterior_second_moment(float(h), e, PRIOR) == pytest.approx(q_ref, abs=1e-10)


def test_posterior_moments_vectorized_consistency():
    h = np.linspace(-40.0, 40.0, 201)
    m, q = posterior_moments(h, 3.0, PRIOR)
    assert m.shape == q.shape == h.shape
    for i in (0, 57, 200):
        assert m[i] == posterior_mean(float(h[i]), 3.0, PRIOR)
        assert q[i] == posterior_second_moment(float(h[i]), 3.0, PRIOR)
    # Posterior variance positive everywhere.
    assert np.all(q - m * m > 0.0)


def test_posterior_mean_odd_and_monotone():
    h = np.linspace(0.0, 25.0, 100)
    m_pos = posterior_mean(h, 2.0, PRIOR)
    m_neg = posterior_mean(-h, 2.0, PRIOR)
    np.testing.assert_allclose(m_pos, -m_neg, rtol=0.0, atol=0.0)
    assert np.all(np.diff(m_pos) > 0.0)


def test_degenerate_priors():
    assert posterior_mean(3.0, 1.0, PriorBG(rho=0.0, sigma_x2=1.0)) == 0.0
    # rho = 1 is plain Gaussian shrinkage h / (E + 1/sigma_x2).
    assert posterior_mean(3.0, 1.0, PriorBG(rho=1.0, sigma_x2=1.0)) == pytest.approx(1.5, rel=1e-14)


def test_channel_validation():
    with pytest.raises(ValueError):
        posterior_mean(1.0, -0.5, PRIOR)
    with pytest.raises(ValueError):
        scalar_mmse(-1.0, PRIOR)


# --- scalar mmse -----------------------------------------------------------

# Frozen from two independent quadratures (breakpoint-hinted adaptive and
# nested double integration), which agree with each other to ~1e-16.
MMSE_TABLE = {
    0.1: 9.89983115874855e-02,
    1.0: 8.55423006017514e-02,
    10.0: 2.06724364213742e-02,
    100.0: 1.72337337029717e-03,
    1000.0: 1.32977777733449e-04,
}


def _mmse_oracle(e, prior):
    """Adaptive-quadrature mmse with explicit transition breakpoints."""
    rho, sx2 = prior.rho, prior.sigma_x2
    a = e + 1.0 / sx2

    def integrand_spike(h):
        return posterior_mean(h, e, prior) ** 2 * np.exp(-0.5 * h * h / e) / math.sqrt(
            2 * math.pi * e
        )

    v_slab = e * e * sx2 + e

    def integrand_slab(h):
        return (h / a - posterior_mean(h, e, prior)) ** 2 * np.exp(
            -0.5 * h * h / v_slab
        ) / math.sqrt(2 * math.pi * v_slab)

    kappa = math.log((1 - rho) / rho) + 0.5 * math.log1p(sx2 * e)
    points = []
    if kappa > 0:
        front = math.sqrt(2 * a * kappa)
        points = [front / 2, front, 2 * front]

    def quad(f, scale):
        lim = 14.0 * scale
        pts = [p for p in points if p < lim]
        val, _ = integrate.quad(
            f, 0.0, lim, points=pts or None, limit=800, epsabs=1e-17, epsrel=1e-14
        )
        return 2.0 * val

    spike = quad(integrand_spike, math.sqrt(e))
    slab = 1.0 / a + quad(integrand_slab, math.sqrt(v_slab))
    return (1.0 - rho) * spike + rho * slab


def test_scalar_mmse_frozen_table():
    for e, ref in MMSE_TABLE.items():
        assert scalar_mmse(e, PRIOR) == pytest.approx(ref, rel=1e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_scalar_mmse_against_hinted_adaptive_oracle():
    for prior in (PRIOR, PriorBG(0.5, 2.0), PriorBG(0.9, 0.5), PriorBG(0.01, 3.0)):
        for e in (1e-3, 0.1, 1.0, 10.0, 100.0, 1e5):
            ref = _mmse_oracle(e, prior)
            assert scalar_mmse(e, prior) == pytest.approx(ref, rel=5e-12), (prior, e)


def test_scalar_mmse_against_nested_quadrature():
    for e in (0.5, 10.0, 300.0):
        assert scalar_mmse(e, PRIOR) == pytest.approx(scalar_mmse_nested(e, PRIOR), rel=1e-10)


def test_scalar_mmse_limits_and_monotonicity():
    assert scalar_mmse(0.0, PRIOR) == PRIOR.q0  # no information
    assert scalar_mmse(1e8, PRIOR) < 1e-6       # perfect information
    es = np.logspace(-3, 6, 60)
    vals = [scalar_mmse(float(e), PRIOR) for e in es]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v <= PRIOR.q0 for v in vals)


def test_scalar_mmse_monte_carlo_agreement():
    # 10^6 paired samples per point; 4 standard errors keeps flake risk low
    # while still catching percent-level bias.
    rng = np.random.default_rng(17)
    n = 1_000_000
    for e in (1.0, 10.0, 100.0):
        x0 = rng.normal(0.0, 1.0, n) * (rng.random(n) < PRIOR.rho)
        h = e * x0 + rng.normal(0.0, math.sqrt(e), n)
        sq = (posterior_mean(h, e, PRIOR) - x0) ** 2
        mc, se = sq.mean(), sq.std(ddof=1) / math.sqrt(n)
        assert abs(scalar_mmse(e, PRIOR) - mc) < 4.0 * se


def test_tilted_expectation_engine_basics():
    # Gaussian weight with f = 1 integrates to 1; f = h^2 gives the variance.
    for std in (0.3, 2.0):
        assert tilted_gaussian_expect(lambda h: np.ones_like(h), std, 5.0, PRIOR) == pytest.approx(
            1.0, rel=1e-12
        )
        assert tilted_gaussian_expect(lambda h: h * h, std, 5.0, PRIOR) == pytest.approx(
            std * std, rel=1e-11
        )
    # Zero-width measure evaluates at the origin.
    assert tilted_gaussian_expect(lambda h: h * h + 3.0, 0.0, 5.0, PRIOR) == 3.0


def test_quadrature_self_check_is_active():
    # A deliberately coarse panel order must trip the doubling check rather
    # than silently return the under-resolved value.
    with pytest.raises(QuadratureError):
        scalar_mmse(100.0, PRIOR, order=2)
    # Opting out returns the (wrong) coarse value instead of raising.
    coarse = scalar_mmse(100.0, PRIOR, order=2, check=False)
    assert abs(coarse - MMSE_TABLE[100.0]) > 1e-8
