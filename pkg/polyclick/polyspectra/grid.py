from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from polyclick import errors, guards

DEFAULT_POINTS = 64
DEFAULT_SPAN = 20


@dataclass(frozen=True)
class FrequencyGrid:
    """Angular frequencies in kHz (rad/ms), strictly ascending."""
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or len(values) == 0:
            raise errors.BadInputError("grid", "must be a nonempty one-dimensional list")
        if not np.all(np.isfinite(values)):
            raise errors.BadInputError("grid", "contains non-finite values")
        if np.any(np.diff(values) <= 0):
            raise errors.BadInputError("grid", "must be strictly ascending")
        if self.symmetric and not np.allclose(values, -values[::-1], rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(values)))):
            raise errors.BadInputError("grid", "flagged symmetric but is not symmetric about 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def symmetric_span(cls, max_freq: float, n_points: int = DEFAULT_POINTS) -> 'FrequencyGrid':
        guards.is_positive("max_freq", max_freq)
        if n_points < 2:
            raise errors.BadInputError("n_points", "must be at least 2")
        return cls(np.linspace(-max_freq, max_freq, n_points), symmetric=True)

    @classmethod
    def default_for(cls, gamma_in: float, gamma_out: float, n_points: int = DEFAULT_POINTS) -> 'FrequencyGrid':
        return cls.symmetric_span(DEFAULT_SPAN * (gamma_in + gamma_out), n_points)

    @classmethod
    def from_frame(cls, frame_length_s: float, n_freq: int) -> 'FrequencyGrid':
        """omega_k = 2 pi k / T for k = -K..K, with n_freq = 2K + 1."""
        guards.is_positive("frame_length", frame_length_s)
        if n_freq < 3 or n_freq % 2 == 0:
            raise errors.BadInputError("n_freq", f"must be odd and at least 3, got {n_freq}")
        half = (n_freq - 1) // 2
        spacing = 2 * np.pi / (frame_length_s * 1000)
        return cls(spacing * np.arange(-half, half + 1), symmetric=True)

    def nearest_index(self, omega: float) -> int:
        return int(np.argmin(np.abs(self.values - omega)))

    def to_dictionary(self) -> Dict[str, Any]:
        return {"omega_khz": self.values.tolist(), "symmetric": self.symmetric}

    @classmethod
    def from_dictionary(cls, data: Dict[str, Any]) -> 'FrequencyGrid':
        return cls(np.asarray(data["omega_khz"], dtype=float), symmetric=bool(data.get("symmetric", False)))
