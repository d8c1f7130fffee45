"""Asymptotic (large-system) performance predictions for the recovery problem.

The replica-symmetric saddle point under the Bayes-optimal matching condition
collapses to one scalar self-consistency equation

    chi = scalar_mmse( E(chi) ),      E(chi) = (2 / sigma2) G'(-chi / sigma2),

whose solution is the predicted per-coordinate MMSE.  The full six-coordinate
free energy density is also evaluated directly (with optional model/true
mismatch) so extremality of the collapsed solution can be verified by finite
differences rather than trusted.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .denoiser import log_partition_z, scalar_mmse, tilted_gaussian_expect
from .gfunc import GFunction, GKind, effective_precision
from .priors import PriorBG

__all__ = [
    "ReplicaFixedPoint",
    "replica_fixed_point",
    "free_energy_density",
    "mse_curve",
]


@dataclass(frozen=True)
class ReplicaFixedPoint:
    """Saddle-point coordinates at the matched (Nishimori) solution.

    chi is the average marginal variance, equal to the predicted mmse; the
    full coordinate set (q, m, q_cap, qhat, mhat, qcap_hat) is redundant at
    the matched point (q = m = Q0 - chi, q_cap = Q0, qhat = mhat = e,
    qcap_hat = 0) but is carried explicitly so the free energy can be
    evaluated and perturbed coordinate by coordinate.
    """

    chi: float
    e: float
    mmse: float
    q: float
    m: float
    q_cap: float
    qhat: float
    mhat: float
    qcap_hat: float
    iterations: int
    alternates: tuple = field(default_factory=tuple)


def _nishimori_point(chi: float, prior: PriorBG, sigma2: float, g: GFunction,
                     iterations: int) -> ReplicaFixedPoint:
    e = effective_precision(chi, sigma2, g)
    q0 = prior.q0
    return ReplicaFixedPoint(
        chi=chi,
        e=e,
        mmse=chi,
        q=q0 - chi,
        m=q0 - chi,
        q_cap=q0,
        qhat=e,
        mhat=e,
        qcap_hat=0.0,
        iterations=iterations,
    )


def _iterate_chi(
    chi0: float,
    prior: PriorBG,
    sigma2: float,
    g: GFunction,
    tol: float,
    max_iter: int,
) -> tuple[float, int]:
    """Damped scalar fixed-point iteration; halves the step on oscillation."""
    chi = float(chi0)
    step = 1.0
    prev_delta = None
    history: deque[float] = deque(maxlen=8)
    for it in range(1, max_iter + 1):
        e = effective_precision(chi, sigma2, g)
        target = scalar_mmse(e, prior)
        delta = target - chi
        history.append(chi)
        if abs(delta) < tol * (1.0 + abs(chi)):
            return target, it
        if prev_delta is not None and delta * prev_delta < 0.0:
            step = 0.5
        chi = chi + step * delta
        prev_delta = delta
    raise RuntimeError(
        f"scalar fixed point did not converge in {max_iter} iterations; "
        f"last chi values: {list(history)}"
    )


def replica_fixed_point(
    prior: PriorBG,
    sigma2: float,
    alpha: float | None,
    g: GFunction,
    tol: float = 1e-12,
    max_iter: int = 2000,
) -> ReplicaFixedPoint:
    """Solve the matched saddle point at aspect ratio alpha.

    For closed-form spectral functions ``g`` is re-anchored at ``alpha``; a
    numeric spectrum is already tied to its ratio, so ``alpha`` must then be
    None or consistent by construction.  Starts the scalar iteration from the
    prior variance and from near zero; if the two converge to distinct
    solutions, the one with lower free energy density is returned and the
    other is attached to ``alternates``.
    """
    if not sigma2 > 0.0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if g.kind is not GKind.SPECTRAL and alpha is not None:
        g = g.with_alpha(alpha)

    q0 = prior.q0
    starts = [q0]
    if q0 > 1e-7:
        starts.append(1e-8)

    solutions: list[tuple[float, int]] = []
    for chi0 in starts:
        chi, iters = _iterate_chi(chi0, prior, sigma2, g, tol, max_iter)
        if not any(math.isclose(chi, c, rel_tol=1e-9, abs_tol=1e-11) for c, _ in solutions):
            solutions.append((chi, iters))

    points = [_nishimori_point(chi, prior, sigma2, g, iters) for chi, iters in solutions]
    if len(points) == 1:
        return points[0]
    points.sort(key=lambda p: free_energy_density(p, prior, sigma2, sigma2, g))
    return replace(points[0], alternates=tuple(points[1:]))


def _log_site_xi(h, e: float, prior: PriorBG):
    """log Xi(h) = log[(1 - rho) + rho Z(h, e)] for the model prior."""
    if prior.rho == 0.0:
        return np.zeros_like(np.asarray(h, dtype=float))
    if prior.rho == 1.0:
        return log_partition_z(h, e, prior)
    return np.logaddexp(
        math.log1p(-prior.rho),
        math.log(prior.rho) + log_partition_z(h, e, prior),
    )


def free_energy_density(
    coords: ReplicaFixedPoint,
    prior: PriorBG,
    sigma2_true: float,
    sigma2: float,
    g: GFunction,
    prior_true: PriorBG | None = None,
) -> float:
    """Variational free energy density at arbitrary saddle coordinates.

    ``prior`` and ``sigma2`` parameterize the postulated model, ``prior_true``
    (defaulting to ``prior``) and ``sigma2_true`` the generating process.  The
    Gaussian averages of the log site partition function reuse the panel
    quadrature engine of the denoiser, so stationarity checks compare like
    with like.
    """
    if prior_true is None:
        prior_true = prior
    if not (sigma2 > 0.0 and sigma2_true > 0.0):
        raise ValueError("noise variances must be positive")

    q, m, q_cap = coords.q, coords.m, coords.q_cap
    qhat, mhat, qcap_hat = coords.qhat, coords.mhat, coords.qcap_hat
    chi = q_cap - q
    if chi < 0.0:
        raise ValueError(f"q_cap - q = {chi} must be nonnegative")
    q0 = prior_true.q0
    x = -chi / sigma2

    bracket = (q - 2.0 * m + q0) / sigma2 - sigma2_true * chi / sigma2**2
    quadratic = -0.5 * qcap_hat * q_cap - 0.5 * qhat * q + mhat * m
    spectral = -g.g(x) + bracket * g.g_prime(x)

    e_eff = qcap_hat + qhat
    if e_eff < 0.0:
        raise ValueError(f"qcap_hat + qhat = {e_eff} must be nonnegative")
    v_spike = qhat
    if v_spike < 0.0:
        raise ValueError(f"qhat = {qhat} must be nonnegative")

    def ln_xi(h):
        return _log_site_xi(h, e_eff, prior)

    rho0 = prior_true.rho
    t_term = 0.0
    if rho0 < 1.0:
        t_term += (1.0 - rho0) * tilted_gaussian_expect(
            ln_xi, math.sqrt(v_spike), e_eff, prior
        )
    if rho0 > 0.0:
        v_slab = qhat + mhat**2 * prior_true.sigma_x2
        t_term += rho0 * tilted_gaussian_expect(
            ln_xi, math.sqrt(v_slab), e_eff, prior
        )
    return quadratic + spectral - t_term


def mse_curve(
    prior: PriorBG,
    sigma2: float,
    g: GFunction,
    inverse_alpha_grid,
) -> list[tuple[float, float]]:
    """Predicted mmse along a grid of undersampling ratios 1/alpha >= 1.

    Grid points that fail to converge are reported as NaN with a warning
    instead of aborting the remaining points.  A decrease of mmse with
    growing 1/alpha is physically unexpected and also warned about.
    """
    grid = [float(v) for v in inverse_alpha_grid]
    if any(v < 1.0 for v in grid):
        raise ValueError(f"inverse alpha values must be >= 1, got {grid}")
    out: list[tuple[float, float]] = []
    for inv_alpha in grid:
        try:
            fp = replica_fixed_point(prior, sigma2, 1.0 / inv_alpha, g)
            out.append((inv_alpha, fp.mmse))
        except Exception as exc:  # noqa: BLE001 - per-point isolation is the contract
            warnings.warn(f"replica fixed point failed at 1/alpha={inv_alpha}: {exc}")
            out.append((inv_alpha, math.nan))
    ordered = sorted(out, key=lambda t: t[0])
    for (ia1, v1), (ia2, v2) in zip(ordered, ordered[1:]):
        if math.isfinite(v1) and math.isfinite(v2) and v2 < v1 * (1.0 - 1e-10):
            warnings.warn(
                f"mmse decreased from {v1} at 1/alpha={ia1} to {v2} at 1/alpha={ia2}"
            )
    return out
