"""Sensing-matrix ensembles and observation synthesis.

Three M x N ensembles, all normalized so trace(A^T A) concentrates on N:

* i.i.d. Gaussian entries N(0, 1/M),
* row-orthogonal: M distinct rows of a Haar orthogonal N x N matrix scaled by
  sqrt(N/M), so A A^T = (N/M) I_M exactly,
* random DCT: M distinct rows of the orthonormal type-II DCT matrix, same
  scaling, same Gram spectrum as row-orthogonal but far cheaper randomness.

Observations follow y = A x0 + noise with isotropic Gaussian noise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .priors import PriorBG

__all__ = [
    "EnsembleKind",
    "EnsembleSpec",
    "ObservationInstance",
    "sample_signal",
    "sample_matrix",
    "observe",
    "make_instance",
]


class EnsembleKind(str, enum.Enum):
    IID_GAUSSIAN = "iid"
    ROW_ORTHOGONAL = "rowortho"
    RANDOM_DCT = "dct"


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble kind plus problem dimensions (M rows, N columns, M <= N)."""

    kind: EnsembleKind
    n: int
    m: int

    def __post_init__(self) -> None:
        if not isinstance(self.kind, EnsembleKind):
            object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if not 0 < self.m <= self.n:
            raise ValueError(f"need 0 < m <= n, got m={self.m}, n={self.n}")

    @property
    def alpha(self) -> float:
        """Aspect ratio M/N in (0, 1]."""
        return self.m / self.n


@dataclass(frozen=True)
class ObservationInstance:
    """One synthesized problem: matrix, observation, ground truth, noise level."""

    a: np.ndarray
    y: np.ndarray
    x0: np.ndarray
    sigma2: float
    seed: int | None = None
    kind: EnsembleKind | None = None

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        y = np.asarray(self.y, dtype=float)
        x0 = np.asarray(self.x0, dtype=float)
        if a.ndim != 2:
            raise ValueError(f"matrix must be 2-d, got shape {a.shape}")
        if y.shape != (a.shape[0],) or x0.shape != (a.shape[1],):
            raise ValueError(
                f"inconsistent shapes: a {a.shape}, y {y.shape}, x0 {x0.shape}"
            )
        if not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def alpha(self) -> float:
        return self.m / self.n


def sample_signal(prior: PriorBG, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an n-vector of i.i.d. Bernoulli-Gaussian entries."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    support = rng.random(n) < prior.rho
    values = rng.normal(0.0, np.sqrt(prior.sigma_x2), size=n)
    return np.where(support, values, 0.0)


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian with sign-fixed R."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def sample_matrix(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw an M x N sensing matrix from the requested ensemble."""
    n, m = spec.n, spec.m
    if spec.kind is EnsembleKind.IID_GAUSSIAN:
        return rng.normal(0.0, 1.0 / np.sqrt(m), size=(m, n))
    rows = rng.choice(n, size=m, replace=False)
    scale = np.sqrt(n / m)
    if spec.kind is EnsembleKind.ROW_ORTHOGONAL:
        return scale * _haar_orthogonal(n, rng)[rows]
    # Orthonormal DCT-II synthesis matrix; rows stay orthonormal under selection.
    dct = scipy.fft.dct(np.eye(n), axis=0, norm="ortho")
    return scale * dct[rows]


def observe(a: np.ndarray, x0: np.ndarray, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """y = A x0 + N(0, sigma2 I); sigma2 = 0 gives the noiseless projection."""
    a = np.asarray(a, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if a.ndim != 2 or x0.shape != (a.shape[1],):
        raise ValueError(f"incompatible shapes: a {a.shape}, x0 {x0.shape}")
    if not sigma2 >= 0.0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    y = a @ x0
    if sigma2 > 0.0:
        y = y + rng.normal(0.0, np.sqrt(sigma2), size=a.shape[0])
    return y


def make_instance(
    spec: EnsembleSpec, prior: PriorBG, sigma2: float, seed: int
) -> ObservationInstance:
    """Synthesize a full observation instance from one seed (matrix, signal, noise)."""
    rng = np.random.default_rng(seed)
    a = sample_matrix(spec, rng)
    x0 = sample_signal(prior, spec.n, rng)
    y = observe(a, x0, sigma2, rng)
    return ObservationInstance(a=a, y=y, x0=x0, sigma2=sigma2, seed=seed, kind=spec.kind)
