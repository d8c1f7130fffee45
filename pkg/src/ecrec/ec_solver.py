"""Expectation-consistent recovery of sparse signals from linear observations.

The solver alternates three self-consistency conditions until the posterior
mean stops moving:

* a scalar effective precision E derived from the average marginal variance
  chi through the spectral function of the matrix ensemble,
* a per-coordinate effective field h combining the data residual with a
  self-term E m that removes the Onsager-style feedback,
* exact Bernoulli-Gaussian posterior moments under the (h, E) channel.

A small damping factor on (m, chi) keeps the iteration stable well into the
regime where plain fixed-point iteration oscillates.  The Gibbs objective
evaluated at the returned state is stationary in all four of its arguments,
which is what couples the solver to the asymptotic replica predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .denoiser import log_partition_z, posterior_moments
from .ensembles import ObservationInstance
from .gfunc import GFunction, GKind, effective_precision
from .priors import PriorBG

__all__ = [
    "DivergenceError",
    "SolverParams",
    "ECState",
    "ec_solve",
    "amp_baseline",
    "nmse",
    "ec_gibbs_objective",
    "ec_free_energy",
]

# Floor applied to chi only where it enters the spectral derivative, so a
# numerically zero variance cannot push the argument onto the domain edge.
_CHI_FLOOR = 1e-12

# An estimate whose root-mean-square exceeds this has left the basin of any
# meaningful fixed point for O(1)-scaled signals; stop instead of overflowing.
_RMS_CEILING = 1e8


class DivergenceError(RuntimeError):
    """Raised when an iterate stops being finite."""

    def __init__(self, message: str, iteration: int) -> None:
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class SolverParams:
    """Iteration controls for :func:`ec_solve`.

    gamma is the damping weight on the new (m, chi) proposal; tol is the
    convergence threshold on the root-mean-square change of the undamped
    posterior-mean proposal.  The default start is m = 0, chi = 0: a zero
    variance start makes the first effective precision as large as the
    spectrum allows, which keeps the early sweeps inside the stable region
    of the damped map.  Warm starts go through init_m / init_chi.
    """

    gamma: float = 0.05
    max_iter: int = 3000
    tol: float = 1e-8
    init_m: np.ndarray | None = None
    init_chi: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.init_chi is not None and not self.init_chi >= 0.0:
            raise ValueError(f"init_chi must be nonnegative, got {self.init_chi}")


@dataclass(frozen=True)
class ECState:
    """Converged (or final) solver state.

    m, q_vec are the posterior mean and second moment per coordinate under
    the effective scalar channel (h, e); chi = mean(q_vec - m**2) is the
    average marginal variance the precision e was computed from.
    """

    m: np.ndarray
    q_vec: np.ndarray
    h: np.ndarray
    chi: float
    e: float
    iterations: int
    converged: bool
    residual: float


def _effective_field(
    obs: ObservationInstance, m: np.ndarray, e: float
) -> np.ndarray:
    return obs.a.T @ (obs.y - obs.a @ m) / obs.sigma2 + e * m


def ec_solve(
    obs: ObservationInstance,
    prior: PriorBG,
    g: GFunction,
    params: SolverParams | None = None,
) -> ECState:
    """Run the damped expectation-consistent fixed-point iteration.

    Returns the state at convergence (residual below ``params.tol``) or after
    ``params.max_iter`` sweeps, whichever comes first; ``converged`` records
    which.  Raises :class:`DivergenceError` if the iterates leave the finite
    range, which for sane inputs only happens with far too aggressive damping.
    """
    if params is None:
        params = SolverParams()
    n = obs.n
    if g.kind is not GKind.SPECTRAL and not math.isclose(
        g.alpha, obs.alpha, rel_tol=0.0, abs_tol=1e-12
    ):
        raise ValueError(
            f"spectral function was built for alpha={g.alpha}, instance has alpha={obs.alpha}"
        )

    if params.init_m is not None:
        m = np.array(params.init_m, dtype=float)
        if m.shape != (n,):
            raise ValueError(f"init_m has shape {m.shape}, expected ({n},)")
    else:
        m = np.zeros(n)
    chi = 0.0 if params.init_chi is None else float(params.init_chi)

    gamma = params.gamma
    iterations = 0
    converged = False
    residual = math.inf
    h = np.zeros(n)
    q_vec = np.full(n, chi)

    for iterations in range(1, params.max_iter + 1):
        e = effective_precision(max(chi, _CHI_FLOOR), obs.sigma2, g)
        h = _effective_field(obs, m, e)
        m_prop, q_vec = posterior_moments(h, e, prior)
        chi_prop = float(np.mean(q_vec - m_prop**2))
        rms = float(np.linalg.norm(m_prop)) / math.sqrt(n)
        if not (math.isfinite(rms) and math.isfinite(chi_prop)) or rms > _RMS_CEILING:
            raise DivergenceError(
                f"iterate diverged at iteration {iterations} "
                f"(rms {rms:.3e}, chi {chi_prop:.3e})",
                iterations,
            )
        residual = float(np.linalg.norm(m_prop - m)) / math.sqrt(n)
        if residual < params.tol:
            m = m_prop
            chi = chi_prop
            converged = True
            break
        m = (1.0 - gamma) * m + gamma * m_prop
        chi = (1.0 - gamma) * chi + gamma * chi_prop

    # Re-close the loop at the final iterate so the returned state is exactly
    # self-consistent: e matches chi, h matches (m, e), moments match (h, e).
    e = effective_precision(max(chi, _CHI_FLOOR), obs.sigma2, g)
    h = _effective_field(obs, m, e)
    m, q_vec = posterior_moments(h, e, prior)

    return ECState(
        m=m,
        q_vec=q_vec,
        h=h,
        chi=chi,
        e=e,
        iterations=iterations,
        converged=converged,
        residual=residual,
    )


def amp_baseline(
    obs: ObservationInstance,
    prior: PriorBG,
    params: SolverParams | None = None,
) -> ECState:
    """Recovery that treats the matrix as i.i.d. Gaussian regardless of origin.

    This is the fixed point reached by approximate message passing; running it
    on structured ensembles shows the cost of assuming the wrong spectrum.
    """
    g = GFunction.iid(obs.alpha)
    return ec_solve(obs, prior, g, params=params)


def nmse(m: np.ndarray, x0: np.ndarray) -> float:
    """Squared error of the estimate normalized by the signal energy."""
    m = np.asarray(m, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if m.shape != x0.shape:
        raise ValueError(f"shape mismatch: {m.shape} vs {x0.shape}")
    denom = float(x0 @ x0)
    if denom == 0.0:
        raise ValueError("reference signal is identically zero")
    diff = m - x0
    return float(diff @ diff) / denom


def _log_site_partition(h: np.ndarray, e: float, prior: PriorBG) -> np.ndarray:
    """log of the full per-site partition function including the spike mass."""
    if prior.rho == 0.0:
        return np.zeros_like(np.asarray(h, dtype=float))
    if prior.rho == 1.0:
        return np.asarray(log_partition_z(h, e, prior), dtype=float)
    return np.logaddexp(
        math.log1p(-prior.rho),
        math.log(prior.rho) + log_partition_z(h, e, prior),
    )


def ec_gibbs_objective(
    m: np.ndarray,
    h: np.ndarray,
    big_q: float,
    e: float,
    obs: ObservationInstance,
    prior: PriorBG,
    g: GFunction,
) -> float:
    """Gibbs objective whose stationary points are the solver's fixed points.

    The four arguments (m, h, big_q, e) are treated as independent; at a
    fixed point of :func:`ec_solve` the gradient with respect to each of them
    vanishes, with q = ||m||^2 / N entering through the spectral term.
    """
    m = np.asarray(m, dtype=float)
    h = np.asarray(h, dtype=float)
    n = obs.n
    if m.shape != (n,) or h.shape != (n,):
        raise ValueError(f"m and h must have shape ({n},)")
    q = float(m @ m) / n
    chi_eff = big_q - q
    if chi_eff < 0.0:
        raise ValueError(f"big_q={big_q} is below ||m||^2/N={q}")
    resid = obs.y - obs.a @ m
    data_term = 0.5 * float(resid @ resid) / obs.sigma2
    spectral_term = -n * g.g(-chi_eff / obs.sigma2)
    coupling = -0.5 * n * e * big_q + float(h @ m)
    site_term = -float(np.sum(_log_site_partition(h, e, prior)))
    return data_term + spectral_term + coupling + site_term


def ec_free_energy(
    state: ECState,
    obs: ObservationInstance,
    prior: PriorBG,
    g: GFunction,
) -> float:
    """Gibbs objective evaluated at a solver state (big_q = chi + ||m||^2/N)."""
    q = float(state.m @ state.m) / obs.n
    return ec_gibbs_objective(
        state.m, state.h, state.chi + q, state.e, obs, prior, g
    )
