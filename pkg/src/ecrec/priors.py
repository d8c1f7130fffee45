"""Bernoulli-Gaussian signal prior.

Each signal entry is 0 with probability 1 - rho and N(0, sigma_x2) with
probability rho, independently across entries.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PriorBG"]


@dataclass(frozen=True)
class PriorBG:
    """Sparse spike-and-slab prior P(x) = (1 - rho) delta(x) + rho N(0, sigma_x2)."""

    rho: float = 0.1
    sigma_x2: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if not self.sigma_x2 > 0.0:
            raise ValueError(f"sigma_x2 must be positive, got {self.sigma_x2}")

    @property
    def q0(self) -> float:
        """Prior second moment E[x^2] = rho * sigma_x2."""
        return self.rho * self.sigma_x2
