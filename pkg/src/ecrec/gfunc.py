"""Spectral G functions of sensing-matrix ensembles.

For a matrix ensemble whose N x N Gram matrix A^T A has limiting eigenvalue
distribution p(lambda), define

    G(x) = extr_Lambda { -(1/2) int p(lambda) ln|Lambda - lambda| d lambda
                         + Lambda x / 2 }  -  (1/2) ln|x|  -  1/2.

G' plays the role of an R-transform (up to a factor 2: G'(0) = mean(lambda)/2)
and feeds the effective precision E(chi) = (2/sigma2) G'(-chi/sigma2) used by
the recovery iteration and the replica predictions.

Three evaluators are provided:

* closed form for i.i.d. Gaussian matrices (entries N(0, 1/M)), valid x < alpha,
* closed form for row-orthogonal matrices (scaled rows of a Haar orthogonal
  matrix, Gram spectrum {(0, 1 - alpha), (1/alpha, alpha)}), valid x <= 0,
* a generic numeric extremizer for an arbitrary nonnegative atomic spectrum,
  used as the oracle the closed forms are validated against.

All extremizations are solved on the branch with Lambda below the smallest
eigenvalue, the one continuous with Lambda ~ 1/x + mean(lambda) as x -> 0-.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "GKind",
    "GFunction",
    "g_iid",
    "g_prime_iid",
    "g_second_iid",
    "g_row_orth",
    "g_prime_row_orth",
    "g_second_row_orth",
    "g_spectral",
    "g_prime_spectral",
    "g_second_spectral",
    "effective_precision",
    "marchenko_pastur_spectrum",
    "load_spectrum",
]


class GKind(str, enum.Enum):
    """Which G evaluator a solver should use."""

    IID_GAUSSIAN = "iid"
    ROW_ORTHOGONAL = "rowortho"
    SPECTRAL = "spectral"


# ---------------------------------------------------------------------------
# i.i.d. Gaussian ensemble, closed form
# ---------------------------------------------------------------------------


def _check_iid_domain(x: float, alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not x < alpha:
        raise ValueError(f"i.i.d. G requires x < alpha, got x={x}, alpha={alpha}")


def g_iid(x: float, alpha: float) -> float:
    """G(x) = -(alpha/2) ln(1 - x/alpha) for the i.i.d. Gaussian ensemble."""
    _check_iid_domain(x, alpha)
    return -0.5 * alpha * math.log1p(-x / alpha)


def g_prime_iid(x: float, alpha: float) -> float:
    """G'(x) = (1/2) / (1 - x/alpha); equals 1/2 at x = 0."""
    _check_iid_domain(x, alpha)
    return 0.5 / (1.0 - x / alpha)


def g_second_iid(x: float, alpha: float) -> float:
    """G''(x) = (1/(2 alpha)) / (1 - x/alpha)^2."""
    _check_iid_domain(x, alpha)
    return 0.5 / alpha / (1.0 - x / alpha) ** 2


# ---------------------------------------------------------------------------
# Row-orthogonal ensemble, closed form
# ---------------------------------------------------------------------------
#
# Stationarity of the extremization is the quadratic
#     x Lambda^2 - (x/alpha + 1) Lambda + (1 - alpha)/alpha = 0.
# In the shifted variable u = Lambda - 1/x it reads
#     x u^2 + (1 - x/alpha) u - 1 = 0,
# whose branch-correct root rationalizes to
#     u = 2 / ((1 - x/alpha) + sqrt((1 - x/alpha)^2 + 4x)),
# exact for all x <= 0 and free of cancellation as x -> 0- (u -> 1).
# G'(x) = Lambda/2 - 1/(2x) = u/2.
#
# alpha = 1 is handled separately: the atom at lambda = 0 then has zero weight
# and contributes a spurious quadratic root that crosses the physical one, so
# the generic branch formula breaks down; the single-atom answer is u = 1.


def _check_row_orth_domain(x: float, alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not x <= 0.0:
        raise ValueError(f"row-orthogonal G requires x <= 0, got {x}")


def _row_orth_u(x: float, alpha: float) -> float:
    if alpha == 1.0 or x == 0.0:
        return 1.0
    b = 1.0 - x / alpha
    return 2.0 / (b + math.sqrt(b * b + 4.0 * x))


def g_row_orth(x: float, alpha: float) -> float:
    """Row-orthogonal G(x) via its extremizer; G(0) = 0, G(x) = x/2 at alpha = 1."""
    _check_row_orth_domain(x, alpha)
    u = _row_orth_u(x, alpha)
    if x == 0.0:
        return 0.0
    # ln|Lambda - lambda| = ln|1 + x(u - lambda)| - ln|x| turns the definition
    # into a form exact on the whole branch and stable near x = 0.
    log_main_atom = math.log1p(x * (u - 1.0 / alpha))
    if alpha == 1.0:
        # the lambda = 0 atom carries zero weight and its log is singular at
        # x <= -1, so it must not be evaluated at all
        return 0.5 * x * u - 0.5 * log_main_atom
    log_zero_atom = math.log1p(x * u)
    return 0.5 * x * u - 0.5 * ((1.0 - alpha) * log_zero_atom + alpha * log_main_atom)


def g_prime_row_orth(x: float, alpha: float) -> float:
    """Row-orthogonal G'(x); equals 1/2 at x = 0 and identically 1/2 at alpha = 1."""
    _check_row_orth_domain(x, alpha)
    return 0.5 * _row_orth_u(x, alpha)


def g_second_row_orth(x: float, alpha: float) -> float:
    """Row-orthogonal G''(x) by implicit differentiation of the quadratic."""
    _check_row_orth_domain(x, alpha)
    if alpha == 1.0:
        return 0.0
    u = _row_orth_u(x, alpha)
    b = 1.0 - x / alpha
    # d/du of the quadratic at the root equals sqrt(b^2 + 4x) on this branch.
    return 0.5 * (u / alpha - u * u) / math.sqrt(b * b + 4.0 * x)


# ---------------------------------------------------------------------------
# Generic atomic spectrum, numeric extremization
# ---------------------------------------------------------------------------


def _validate_spectrum(eigenvalues: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if lam.size == 0 or lam.shape != w.shape:
        raise ValueError("spectrum needs matching, nonempty eigenvalue and weight arrays")
    if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(w)):
        raise ValueError("spectrum contains non-finite entries")
    if np.any(lam < 0.0):
        raise ValueError("Gram eigenvalues must be nonnegative")
    if np.any(w < 0.0):
        raise ValueError("spectrum weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"spectrum weights must sum to 1 within 1e-12, got {w.sum()!r}")
    return lam, w


def _spectral_u(x: float, lam: np.ndarray, w: np.ndarray) -> float:
    """Extremizer of the spectral objective, as u = Lambda - 1/x.

    Solves sum_k w_k / (Lambda - lambda_k) = x on the branch Lambda < min(lambda).
    For |x| small the equivalent fixed point u = T(1/x + u)/x with
    T(L) = sum_k w_k lambda_k / (L - lambda_k) is iterated instead, because the
    difference Lambda - 1/x underflows the interesting digits in Lambda-space.
    """
    mean = float(w @ lam)
    if x == 0.0:
        return mean
    lam_max = float(lam.max())
    lam_min = float(lam.min())

    if lam_max == 0.0:
        # All mass at zero: Lambda = 1/x exactly, u = 0.
        return 0.0

    if abs(x) * lam_max <= 0.1:
        # Contraction rate is bounded by ~4 mean |x| <= 0.4 in this regime.
        u = mean
        for _ in range(200):
            t = float(np.sum(w * lam / ((1.0 / x + u) - lam)))
            u_new = t / x
            if abs(u_new - u) <= 1e-16 * (1.0 + abs(u_new)):
                return u_new
            u = u_new
        raise RuntimeError(f"spectral extremizer fixed point failed to settle at x={x}")

    def s_of(lmbda: float) -> float:
        return float(np.sum(w / (lmbda - lam)))

    lo = 1.0 / x  # S(1/x) >= x holds for any nonnegative spectrum
    delta = 1e-9 * max(1.0, lam_max)
    hi = lam_min - delta
    for _ in range(40):
        if hi > lo and s_of(hi) < x:
            break
        delta *= 1e-3
        hi = lam_min - delta
    else:
        raise RuntimeError(f"failed to bracket the spectral stationary root at x={x}")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # interval is at float resolution
        if s_of(mid) >= x:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if abs(s_of(root) - x) > 1e-12 * max(1.0, abs(x)) and (hi - lo) > 4.0 * np.spacing(abs(root) + 1.0):
        raise RuntimeError(f"spectral stationary root did not converge at x={x}")
    return root - 1.0 / x


def g_prime_spectral(x: float, eigenvalues, weights) -> float:
    """G'(x) for an atomic spectrum; G'(0) = mean(lambda)/2."""
    lam, w = _validate_spectrum(eigenvalues, weights)
    if x > 0.0:
        raise ValueError(f"spectral G requires x <= 0, got {x}")
    return 0.5 * _spectral_u(x, lam, w)


def g_spectral(x: float, eigenvalues, weights) -> float:
    """G(x) for an atomic spectrum, evaluated at its extremizer."""
    lam, w = _validate_spectrum(eigenvalues, weights)
    if x > 0.0:
        raise ValueError(f"spectral G requires x <= 0, got {x}")
    if x == 0.0:
        return 0.0
    u = _spectral_u(x, lam, w)
    # x(Lambda - lambda_k) > 0 on the branch, so every log1p argument is positive.
    return 0.5 * x * u - 0.5 * float(np.sum(w * np.log1p(x * (u - lam))))


def g_second_spectral(x: float, eigenvalues, weights) -> float:
    """G''(x) for an atomic spectrum, by implicit differentiation."""
    lam, w = _validate_spectrum(eigenvalues, weights)
    if x > 0.0:
        raise ValueError(f"spectral G requires x <= 0, got {x}")
    mean = float(w @ lam)
    var = float(w @ (lam - mean) ** 2)
    if x == 0.0:
        return 0.5 * var
    u = _spectral_u(x, lam, w)
    if abs(x) * max(float(lam.max()), 1e-300) <= 0.1:
        # Series u'(x) = var + 2 c x + O(x^2) avoids the 1/x^2 cancellation.
        m2 = float(w @ lam**2)
        m3 = float(w @ lam**3)
        c = m3 - 3.0 * mean * m2 + 2.0 * mean**3
        return 0.5 * (var + 2.0 * c * x)
    lmbda = 1.0 / x + u
    s_prime = -float(np.sum(w / (lmbda - lam) ** 2))
    return 0.5 * (1.0 / s_prime + 1.0 / (x * x))


# ---------------------------------------------------------------------------
# Dispatching wrapper
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GFunction:
    """A concrete G evaluator: closed form tied to an aspect ratio, or a spectrum."""

    kind: GKind
    alpha: float | None = None
    eigenvalues: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind is GKind.SPECTRAL:
            if self.eigenvalues is None or self.weights is None:
                raise ValueError("spectral GFunction needs eigenvalue and weight arrays")
            lam, w = _validate_spectrum(self.eigenvalues, self.weights)
            object.__setattr__(self, "eigenvalues", lam)
            object.__setattr__(self, "weights", w)
        else:
            if self.alpha is None or not 0.0 < self.alpha <= 1.0:
                raise ValueError(f"closed-form GFunction needs alpha in (0, 1], got {self.alpha}")

    @classmethod
    def iid(cls, alpha: float) -> "GFunction":
        return cls(GKind.IID_GAUSSIAN, alpha=alpha)

    @classmethod
    def row_orthogonal(cls, alpha: float) -> "GFunction":
        return cls(GKind.ROW_ORTHOGONAL, alpha=alpha)

    @classmethod
    def spectral(cls, eigenvalues, weights) -> "GFunction":
        return cls(GKind.SPECTRAL, eigenvalues=np.asarray(eigenvalues, float),
                   weights=np.asarray(weights, float))

    def with_alpha(self, alpha: float) -> "GFunction":
        """Same closed form at a different aspect ratio; undefined for spectra."""
        if self.kind is GKind.SPECTRAL:
            raise ValueError("a numeric spectrum is tied to its aspect ratio")
        return replace(self, alpha=alpha)

    def g(self, x: float) -> float:
        if self.kind is GKind.IID_GAUSSIAN:
            return g_iid(x, self.alpha)
        if self.kind is GKind.ROW_ORTHOGONAL:
            return g_row_orth(x, self.alpha)
        return g_spectral(x, self.eigenvalues, self.weights)

    def g_prime(self, x: float) -> float:
        if self.kind is GKind.IID_GAUSSIAN:
            return g_prime_iid(x, self.alpha)
        if self.kind is GKind.ROW_ORTHOGONAL:
            return g_prime_row_orth(x, self.alpha)
        return g_prime_spectral(x, self.eigenvalues, self.weights)

    def g_second(self, x: float) -> float:
        if self.kind is GKind.IID_GAUSSIAN:
            return g_second_iid(x, self.alpha)
        if self.kind is GKind.ROW_ORTHOGONAL:
            return g_second_row_orth(x, self.alpha)
        return g_second_spectral(x, self.eigenvalues, self.weights)


def effective_precision(chi: float, sigma2: float, g: GFunction) -> float:
    """Effective precision E(chi) = (2/sigma2) G'(-chi/sigma2).

    For the i.i.d. closed form this reduces to 1/(sigma2 + chi/alpha).
    """
    if not chi >= 0.0:
        raise ValueError(f"chi must be nonnegative, got {chi}")
    if not sigma2 > 0.0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    return 2.0 / sigma2 * g.g_prime(-chi / sigma2)


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


def row_orthogonal_spectrum(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact Gram spectrum of the row-orthogonal ensemble: {(0, 1-a), (1/a, a)}."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        return np.array([1.0]), np.array([1.0])
    return np.array([0.0, 1.0 / alpha]), np.array([1.0 - alpha, alpha])


def marchenko_pastur_spectrum(alpha: float, n_atoms: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Atomize the limiting Gram eigenvalue law of the i.i.d. Gaussian ensemble.

    The bulk on [(1 - sqrt(1/alpha))^2, (1 + sqrt(1/alpha))^2] is discretized
    with a midpoint rule in the angle of lambda = c + r sin(theta); the
    substitution absorbs the square-root edge factors, so the rule converges
    geometrically in n_atoms. For alpha < 1 the point mass 1 - alpha at zero
    is prepended. Weights sum to 1 exactly.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if n_atoms < 2:
        raise ValueError("n_atoms must be at least 2")
    ratio = 1.0 / alpha
    edge_lo = (1.0 - math.sqrt(ratio)) ** 2
    edge_hi = (1.0 + math.sqrt(ratio)) ** 2
    center = 0.5 * (edge_lo + edge_hi)
    radius = 0.5 * (edge_hi - edge_lo)
    theta = -0.5 * np.pi + np.pi * (np.arange(n_atoms) + 0.5) / n_atoms
    lam = center + radius * np.sin(theta)
    w = alpha * radius**2 * np.cos(theta) ** 2 / (2.0 * n_atoms * lam)
    bulk_mass = alpha if alpha < 1.0 else 1.0
    w *= bulk_mass / w.sum()
    if alpha < 1.0:
        lam = np.concatenate(([0.0], lam))
        w = np.concatenate(([1.0 - alpha], w))
    return lam, w


def load_spectrum(path) -> GFunction:
    """Read an atomic spectrum from text, one "lambda weight" pair per line."""
    atoms = np.loadtxt(path, dtype=float, comments="#", ndmin=2)
    if atoms.shape[1] != 2:
        raise ValueError(f"spectrum file must have two columns, got {atoms.shape[1]}")
    return GFunction.spectral(atoms[:, 0], atoms[:, 1])
