"""
The blinking emitter as a four-state Markov model.

States (0-based index, 1-based label used in the literature):

    0 = |1>  charged, dark
    1 = |2>  charged, photon in the detector
    2 = |3>  uncharged, bright
    3 = |4>  uncharged, photon in the detector

The uncharged dot is the emitting one. Some figures in the literature call
the charged state "bright"; this package does not.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from polyclick import guards
from polyclick.model.core import LindbladSystem, basis_matrix, jump_terms

logger = logging.getLogger("model.emitter")

DETECTOR_SPEED_WARNING_RATIO = 10


@dataclass(frozen=True)
class EmitterParams:
    gamma_in: float
    gamma_out: float
    gamma_ph: float
    gamma_det: float
    beta_sq: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            guards.is_nonnegative(name, value)

    @property
    def detector_is_slow(self) -> bool:
        return self.gamma_ph > 0 and self.gamma_det < DETECTOR_SPEED_WARNING_RATIO * self.gamma_ph

    def warn_if_slow_detector(self):
        """Called once per simulation or model evaluation command, never from the fit objective."""
        if self.detector_is_slow:
            logger.warning(f"gamma_det = {self.gamma_det} kHz is not much faster than gamma_ph = {self.gamma_ph} kHz.")

    @property
    def switching_rate(self) -> float:
        return self.gamma_in + self.gamma_out

    @property
    def bright_fraction(self) -> float:
        return self.gamma_out / (self.gamma_in + self.gamma_out)

    def to_dictionary(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dictionary(cls, data: Dict[str, Any]) -> 'EmitterParams':
        return cls(
            gamma_in=float(data["gamma_in"]),
            gamma_out=float(data["gamma_out"]),
            gamma_ph=float(data["gamma_ph"]),
            gamma_det=float(data["gamma_det"]),
            beta_sq=float(data["beta_sq"])
        )


def electron_operator() -> np.ndarray:
    """a = |3><1| + |4><2|, removes the extra electron."""
    return basis_matrix(4, 2, 0) + basis_matrix(4, 3, 1)


def detector_operator() -> np.ndarray:
    """b = |3><4| + |1><2|, empties the detector."""
    return basis_matrix(4, 2, 3) + basis_matrix(4, 0, 1)


def photon_operator() -> np.ndarray:
    """(1 - a^dagger a) b^dagger, which is |4><3|."""
    a = electron_operator()
    b = detector_operator()
    return (np.eye(4) - a.conj().T @ a) @ b.conj().T


def emitter_measurement() -> np.ndarray:
    """A = |2><2| + |4><4|, the detector output."""
    return basis_matrix(4, 1, 1) + basis_matrix(4, 3, 3)


def build_emitter_liouvillian(params: EmitterParams) -> LindbladSystem:
    a = electron_operator()
    jumps = jump_terms([
        (a.conj().T, params.gamma_in),
        (a, params.gamma_out),
        (photon_operator(), params.gamma_ph),
        (detector_operator(), params.gamma_det)
    ])
    return LindbladSystem(dim=4, jumps=jumps, measurement=emitter_measurement(), beta_sq=params.beta_sq)


def build_telegraph_system(gamma_in: float, gamma_out: float, beta_sq: float = 1.0) -> LindbladSystem:
    """Two-state occupation model: state 0 dark, state 1 bright, measured level 1 when bright."""
    jumps = jump_terms([
        (basis_matrix(2, 0, 1), gamma_in),
        (basis_matrix(2, 1, 0), gamma_out)
    ])
    return LindbladSystem(dim=2, jumps=jumps, measurement=basis_matrix(2, 1, 1), beta_sq=beta_sq)
