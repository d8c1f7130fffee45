"""Scalar posterior computations for the Bernoulli-Gaussian prior.

Given a Gaussian measurement channel summarized by a field h and a precision
e, the tilted single-site measure is

    p(x | h, e)  propto  P(x) exp(-e x^2 / 2 + h x),

with P the spike-and-slab prior. The slab contributes the partition factor

    Z(h, e) = (1 + sigma_x2 e)^(-1/2) exp(h^2 / (2 (e + 1/sigma_x2))),

and the posterior mass on the slab is rho Z / (1 - rho + rho Z). All weight
arithmetic runs in log space, so fields of any magnitude are safe.

scalar_mmse integrates the squared estimation error of this denoiser over the
matched channel h = e x0 + sqrt(e) z, the quantity the replica fixed point
iterates on. The integrands switch between spike-like and slab-like behavior
across a narrow sigmoid front at |h| = sqrt(2 a kappa) (a = e + 1/sigma_x2),
which defeats plain Gauss-Hermite rules, so expectations over Gaussian fields
are taken with composite Gauss-Legendre panels split at that front. The same
engine is exported for other even integrands of the tilted measure.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.special import expit

from .priors import PriorBG

__all__ = [
    "QuadratureError",
    "log_partition_z",
    "partition_z",
    "posterior_mean",
    "posterior_second_moment",
    "posterior_moments",
    "scalar_mmse",
    "scalar_mmse_nested",
    "tilted_gaussian_expect",
]


class QuadratureError(RuntimeError):
    """Raised when doubling the quadrature order moves the answer too much."""


def _check_channel(e: float, prior: PriorBG) -> None:
    if not isinstance(prior, PriorBG):
        raise TypeError(f"prior must be a PriorBG, got {type(prior).__name__}")
    if not e >= 0.0:
        raise ValueError(f"channel precision e must be nonnegative, got {e}")


def log_partition_z(h, e: float, prior: PriorBG):
    """log Z(h, e) for the slab component; h may be a scalar or an array."""
    _check_channel(e, prior)
    h = np.asarray(h, dtype=float)
    a = e + 1.0 / prior.sigma_x2
    out = -0.5 * np.log1p(prior.sigma_x2 * e) + h * h / (2.0 * a)
    return out if out.ndim else float(out)


def partition_z(h, e: float, prior: PriorBG):
    """Slab partition factor Z(h, e) = exp(log_partition_z); always positive."""
    out = np.exp(log_partition_z(h, e, prior))
    return out if np.ndim(out) else float(out)


def _slab_probability(h, e: float, prior: PriorBG):
    """Posterior probability that x came from the slab, rho Z / (1 - rho + rho Z)."""
    if prior.rho == 0.0:
        return np.zeros_like(np.asarray(h, dtype=float))
    if prior.rho == 1.0:
        return np.ones_like(np.asarray(h, dtype=float))
    log_odds = log_partition_z(h, e, prior) - math.log((1.0 - prior.rho) / prior.rho)
    return expit(log_odds)


def posterior_moments(h, e: float, prior: PriorBG):
    """Posterior mean and second moment of x under the tilted measure.

    Returns (m, q) with m = w h/a and q = w (1/a + (h/a)^2), where
    a = e + 1/sigma_x2 and w is the slab probability. Vectorized over h.
    """
    _check_channel(e, prior)
    h = np.asarray(h, dtype=float)
    a = e + 1.0 / prior.sigma_x2
    w = _slab_probability(h, e, prior)
    slab_mean = h / a
    m = w * slab_mean
    q = w * (1.0 / a + slab_mean * slab_mean)
    if h.ndim:
        return m, q
    return float(m), float(q)


def posterior_mean(h, e: float, prior: PriorBG):
    """Posterior mean of x given field h and precision e."""
    return posterior_moments(h, e, prior)[0]


def posterior_second_moment(h, e: float, prior: PriorBG):
    """Posterior second moment of x given field h and precision e."""
    return posterior_moments(h, e, prior)[1]


# ---------------------------------------------------------------------------
# Gaussian expectations of tilted-measure integrands
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    return np.polynomial.legendre.leggauss(order)


def _panel_edges(std: float, e: float, prior: PriorBG) -> np.ndarray:
    """Break [0, 12 std] at the sigmoid front of the slab weight, if it is inside."""
    upper = 12.0 * std
    edges = {0.0, upper}
    if 0.0 < prior.rho < 1.0 and e > 0.0:
        a = e + 1.0 / prior.sigma_x2
        kappa = math.log((1.0 - prior.rho) / prior.rho) + 0.5 * math.log1p(prior.sigma_x2 * e)
        if kappa > 0.0:
            front = math.sqrt(2.0 * a * kappa)
            width = a / front  # reciprocal slope of the log odds at the front
            lo, hi = front - 10.0 * width, front + 10.0 * width
            if lo < upper:
                edges.add(max(lo, 0.0))
                edges.add(min(hi, upper))
    out = [0.0]
    # Cap panel width at 2.5 std so every panel resolves the Gaussian factor.
    for edge in sorted(edges)[1:]:
        gap = edge - out[-1]
        pieces = max(1, math.ceil(gap / (2.5 * std)))
        out.extend(out[-1] + gap * (k + 1) / pieces for k in range(pieces))
    return np.asarray(out)


def tilted_gaussian_expect(f, std: float, e: float, prior: PriorBG, order: int = 64) -> float:
    """E[f(h)] for h ~ N(0, std^2) and f an even, vectorized tilted-measure integrand.

    Composite Gauss-Legendre with panels split at the slab-weight sigmoid front
    of the (e, prior) channel; exact Gaussian tails are truncated at 12 std.
    """
    if std == 0.0:
        return float(np.asarray(f(np.zeros(1)))[0])
    edges = _panel_edges(std, e, prior)
    nodes, weights = _gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    h = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    pdf = np.exp(-h * h / (2.0 * std * std)) / (math.sqrt(2.0 * math.pi) * std)
    return 2.0 * float(w @ (np.asarray(f(h)) * pdf))


def _mmse_quadrature(e: float, prior: PriorBG, order: int) -> float:
    a = e + 1.0 / prior.sigma_x2
    # Spike branch: x0 = 0, so h = sqrt(e) z.
    spike = tilted_gaussian_expect(
        lambda h: posterior_mean(h, e, prior) ** 2, math.sqrt(e), e, prior, order
    )
    # Slab branch: h = e x0 + sqrt(e) z is Gaussian with variance e^2 sx2 + e,
    # and E[(x0 - m(h))^2 | h] = 1/a + (h/a - m(h))^2 by Gaussian conditioning.
    slab = 1.0 / a + tilted_gaussian_expect(
        lambda h: (h / a - posterior_mean(h, e, prior)) ** 2,
        math.sqrt(e * e * prior.sigma_x2 + e), e, prior, order,
    )
    return (1.0 - prior.rho) * spike + prior.rho * slab


def scalar_mmse(e: float, prior: PriorBG, order: int = 64, check: bool = True) -> float:
    """Minimum mean squared error of the scalar channel h = e x0 + sqrt(e) z.

    mmse(e) = E[(x0 - posterior_mean(h, e))^2] with x0 drawn from the prior and
    z standard normal. At e = 0 this is the prior variance rho sigma_x2; it is
    nonincreasing in e. With check=True the panel order is doubled and a
    discrepancy above 1e-8 raises QuadratureError.
    """
    _check_channel(e, prior)
    if e == 0.0 or prior.rho == 0.0:
        return prior.q0
    value = _mmse_quadrature(e, prior, order)
    if check:
        refined = _mmse_quadrature(e, prior, 2 * order)
        if abs(refined - value) > 1e-8:
            raise QuadratureError(
                f"quadrature order {order} too small: mmse moved from {value!r} "
                f"to {refined!r} on doubling"
            )
    return value


def scalar_mmse_nested(e: float, prior: PriorBG) -> float:
    """scalar_mmse by nested adaptive quadrature over (x0, z), no reductions.

    Slow independent cross-check of the single-Gaussian-per-branch reduction
    used by scalar_mmse; the two must agree to 1e-10.
    """
    from scipy.integrate import quad

    _check_channel(e, prior)
    if e == 0.0 or prior.rho == 0.0:
        return prior.q0

    def z_density(z):
        return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    def inner(x0):
        f = lambda z: (x0 - posterior_mean(e * x0 + math.sqrt(e) * z, e, prior)) ** 2 * z_density(z)
        return quad(f, -12.0, 12.0, limit=400, epsabs=1e-14, epsrel=1e-12)[0]

    spike = inner(0.0)
    sx = math.sqrt(prior.sigma_x2)
    outer = lambda x0: inner(x0) * math.exp(-x0 * x0 / (2.0 * prior.sigma_x2)) / (math.sqrt(2.0 * math.pi) * sx)
    slab, _ = quad(outer, -12.0 * sx, 12.0 * sx, limit=400, epsabs=1e-14, epsrel=1e-12)
    return (1.0 - prior.rho) * spike + prior.rho * slab
