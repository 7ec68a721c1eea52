"""
Window functions on a frame [0, T]. Times are given as fractions u = t / T.

The confined Gaussian follows the approximate form

    g(u) = G(u) - G(0) [G(u + 1) + G(u - 1)] / [G(1) + G(-1)],
    G(u) = exp(-((u - 1/2) / (2 sigma))^2),

which vanishes at both frame edges.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np
import scipy.integrate

from polyclick import errors

CONFINED_GAUSSIAN = "confined_gaussian"
RECTANGULAR = "rectangular"
WINDOW_KINDS = (CONFINED_GAUSSIAN, RECTANGULAR)
DEFAULT_SIGMA = 0.14


@dataclass(frozen=True)
class Window:
    kind: str = CONFINED_GAUSSIAN
    sigma: float = DEFAULT_SIGMA
    norms: Dict[int, float] = field(default_factory=dict, init=False, compare=False)

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise errors.ConfigurationError(f"unknown window [{self.kind}], expected one of {', '.join(WINDOW_KINDS)}")
        if self.kind == CONFINED_GAUSSIAN and not (0 < self.sigma < 1):
            raise errors.ConfigurationError(f"window sigma must lie in (0, 1), got {self.sigma}")
        object.__setattr__(self, "norms", {n: self._norm(n) for n in range(1, 5)})

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == RECTANGULAR:
            return np.ones_like(u)
        return self._gaussian(u) - self._gaussian(0.0) * (self._gaussian(u + 1) + self._gaussian(u - 1)) / (self._gaussian(1.0) + self._gaussian(-1.0))

    def _gaussian(self, u):
        return np.exp(-((u - 0.5) / (2 * self.sigma)) ** 2)

    def _norm(self, order: int) -> float:
        """w_n = (1/T) integral of g^n over the frame."""
        if self.kind == RECTANGULAR:
            return 1.0
        value, _ = scipy.integrate.quad(lambda u: float(self(u)) ** order, 0, 1, epsabs=0, epsrel=1e-12, limit=200)
        return value

    def norm(self, order: int) -> float:
        return self.norms[order]
