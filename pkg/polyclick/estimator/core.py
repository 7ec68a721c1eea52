"""
Polyspectra estimation from click timestamps without binning.

Per frame of length T the windowed coefficients

    a'_k = sum_j g(t_j) b_j exp(i w_k t_j),    w_k = 2 pi k / T,

are formed with fresh exponential weights b_j for every resampling
realization. Joint k-statistics over the frames of a batch, divided by
T w_n, give S^(n). Realizations are averaged; the scatter between batches
gives the standard errors.

Inside this module times are in ms and frequencies in kHz (rad/ms).
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from polyclick import errors, spectra_file, utils
from polyclick.estimator import cumulants
from polyclick.estimator.clicks import RNG_ALGORITHM, ClickRecord
from polyclick.estimator.windows import CONFINED_GAUSSIAN, DEFAULT_SIGMA, Window
from polyclick.polyspectra.grid import FrequencyGrid

logger = logging.getLogger("estimator")

ALL_ORDERS = (1, 2, 3, 4)


@dataclass(frozen=True)
class EstimationConfig:
    frame_length: Optional[float] = 0.06
    n_freq: int = 65
    max_freq: Optional[float] = None
    window: str = CONFINED_GAUSSIAN
    window_sigma: float = DEFAULT_SIGMA
    orders: Tuple[int, ...] = ALL_ORDERS
    resampling_count: int = 100
    batch_count: int = 10
    seed: int = 0
    exponential_weights: bool = True
    realization_chunk: int = 25

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(sorted(set(int(order) for order in self.orders))))
        if not self.orders or not set(self.orders) <= set(ALL_ORDERS):
            raise errors.ConfigurationError(f"orders must be a nonempty subset of {ALL_ORDERS}, got {self.orders}")
        if self.n_freq < 3 or self.n_freq % 2 == 0:
            raise errors.ConfigurationError(f"n_freq must be odd and at least 3, got {self.n_freq}")
        if self.resampling_count < 1:
            raise errors.ConfigurationError("resampling_count must be at least 1")
        if self.batch_count < 2:
            raise errors.ConfigurationError("batch_count must be at least 2")
        if self.realization_chunk < 1:
            raise errors.ConfigurationError("realization_chunk must be at least 1")

        if self.frame_length is None:
            if self.max_freq is None or self.max_freq <= 0:
                raise errors.ConfigurationError("either frame_length or a positive max_freq is needed")
            object.__setattr__(self, "frame_length", 2 * np.pi * self.half_width / (self.max_freq * 1000))
        if not self.frame_length > 0:
            raise errors.ConfigurationError(f"frame_length must be positive, got {self.frame_length}")
        if self.max_freq is not None and self.max_freq > np.pi * self.n_freq / self.frame_length_ms * (1 + 1e-12):
            raise errors.ConfigurationError(f"max_freq {self.max_freq} kHz exceeds pi * n_freq / T = {np.pi * self.n_freq / self.frame_length_ms:.6g} kHz")

    @property
    def half_width(self) -> int:
        return (self.n_freq - 1) // 2

    @property
    def frame_length_ms(self) -> float:
        assert self.frame_length is not None
        return self.frame_length * 1000

    @property
    def grid(self) -> FrequencyGrid:
        assert self.frame_length is not None
        return FrequencyGrid.from_frame(self.frame_length, self.n_freq)

    @property
    def frames_per_batch_needed(self) -> int:
        return max(max(self.orders), 2)

    def make_window(self) -> Window:
        return Window(self.window, self.window_sigma)

    def to_dictionary(self) -> Dict[str, Any]:
        data = asdict(self)
        data["orders"] = list(self.orders)
        return data

    @classmethod
    def from_dictionary(cls, data: Dict[str, Any]) -> 'EstimationConfig':
        known = {name: value for name, value in data.items() if name in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise errors.UnknownConfigurationError(", ".join(sorted(unknown)))
        if "orders" in known:
            known["orders"] = tuple(known["orders"])
        return cls(**known)

    def to_options(self) -> Dict[str, Any]:
        """The same settings under the command-line option names."""
        return {
            "frame-length": self.frame_length,
            "n-freq": self.n_freq,
            "max-freq": self.max_freq,
            "window": self.window,
            "window-sigma": self.window_sigma,
            "orders": list(self.orders),
            "resampling-count": self.resampling_count,
            "batch-count": self.batch_count,
            "realization-chunk": self.realization_chunk,
            "naive-weights": not self.exponential_weights,
            "seed": self.seed
        }


@dataclass(frozen=True)
class SpectraSet:
    grid: FrequencyGrid
    s1: Optional[float] = None
    s1_sigma: Optional[float] = None
    s2: Optional[np.ndarray] = None
    s2_sigma: Optional[np.ndarray] = None
    s3: Optional[np.ndarray] = None
    s3_sigma: Optional[np.ndarray] = None
    s4: Optional[np.ndarray] = None
    s4_sigma: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def orders(self) -> Tuple[int, ...]:
        present = [(1, self.s1), (2, self.s2), (3, self.s3), (4, self.s4)]
        return tuple(order for order, value in present if value is not None)

    def to_dictionary(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"grid": self.grid.to_dictionary(), "metadata": self.metadata}
        if self.s1 is not None:
            data["s1"] = {"value": self.s1, "sigma": self.s1_sigma}
        if self.s2 is not None:
            data["s2"] = {"value": self.s2.tolist(), "sigma": np.asarray(self.s2_sigma).tolist()}
        if self.s3 is not None:
            sigma = np.asarray(self.s3_sigma)
            data["s3"] = dict(utils.complex_to_pairs(self.s3), sigma_real=sigma.real.tolist(), sigma_imag=sigma.imag.tolist())
        if self.s4 is not None:
            data["s4"] = {"value": self.s4.tolist(), "sigma": np.asarray(self.s4_sigma).tolist()}
        return data

    @classmethod
    def from_dictionary(cls, data: Dict[str, Any]) -> 'SpectraSet':
        values: Dict[str, Any] = {}
        if "s1" in data:
            values["s1"] = float(data["s1"]["value"])
            values["s1_sigma"] = float(data["s1"]["sigma"])
        for order in ("s2", "s4"):
            if order in data:
                values[order] = np.asarray(data[order]["value"], dtype=float)
                values[f"{order}_sigma"] = np.asarray(data[order]["sigma"], dtype=float)
        if "s3" in data:
            values["s3"] = utils.pairs_to_complex(data["s3"])
            values["s3_sigma"] = utils.pairs_to_complex({"real": data["s3"]["sigma_real"], "imag": data["s3"]["sigma_imag"]})
        return cls(grid=FrequencyGrid.from_dictionary(data["grid"]), metadata=data.get("metadata", {}), **values)

    def save(self, path: Path, force: bool = False, echo: Optional[Dict[str, Any]] = None):
        """`echo` is the option set that reproduces this file; by default the estimation settings."""
        config = self.metadata.get("config", {})
        seeds = {"seed": config.get("seed")} if "seed" in config else {}
        if echo is None:
            echo = EstimationConfig.from_dictionary(config).to_options() if config else {}
        spectra_file.write(path, spectra_file.wrap("spectra", self.to_dictionary(), echo, seeds), force)

    @classmethod
    def load(cls, path: Path) -> 'SpectraSet':
        return cls.from_dictionary(spectra_file.read(path, "spectra"))


def segment(clicks: ClickRecord, frame_length: float, batch_count: Optional[int] = None) -> List[np.ndarray]:
    """Per-frame click times in seconds, relative to the frame start; half-open frames, remainder dropped."""
    if not frame_length > 0:
        raise errors.ConfigurationError(f"frame_length must be positive, got {frame_length}")
    n_frames = int(np.floor(clicks.duration / frame_length * (1 + 1e-12)))
    needed = batch_count if batch_count else 1
    if n_frames < needed:
        raise errors.InsufficientFramesError(n_frames, needed)

    starts = frame_length * np.arange(n_frames + 1)
    bounds = np.searchsorted(clicks.timestamps, starts, side="left")
    return [clicks.timestamps[bounds[k]:bounds[k + 1]] - starts[k] for k in range(n_frames)]


def click_fourier(frame_times: np.ndarray, weights: np.ndarray, frame_length: float, window: Window, n_coefficients: int) -> np.ndarray:
    """
    a'_k for k = 0..n_coefficients-1, from click times (seconds, frame-relative).
    `weights` is (clicks,) or (clicks, realizations); the result gains the same trailing axis.
    """
    u = np.asarray(frame_times, dtype=float) / frame_length
    weights = np.asarray(weights, dtype=float)
    tapered = window(u).reshape((-1,) + (1,) * (weights.ndim - 1)) * weights
    phases = np.exp(2j * np.pi * np.outer(np.arange(n_coefficients), u))
    return phases @ tapered


def sampled_fourier(samples: np.ndarray, frame_length: float, window: Window, n_coefficients: int) -> np.ndarray:
    """a_k = (T/N) sum_j g_j z_j exp(2 pi i j k / N) for k = 0..n_coefficients-1, T in ms."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n_coefficients > n:
        raise errors.ConfigurationError(f"{n_coefficients} coefficients need at least as many samples per frame, got {n}")
    tapered = window(np.arange(n) / n) * samples
    return frame_length * 1000 * np.fft.ifft(tapered)[:n_coefficients]


def _coefficient_count(config: EstimationConfig) -> int:
    if 3 in config.orders:
        return 2 * config.half_width + 1
    return config.half_width + 1


def _spectra_of_batch(coefficients: np.ndarray, config: EstimationConfig, window: Window) -> Dict[int, np.ndarray]:
    """Per-realization spectra from coefficients of shape (realizations, frames, k >= 0)."""
    K = config.half_width
    T = config.frame_length_ms
    spectra: Dict[int, np.ndarray] = {}

    if 1 in config.orders:
        spectra[1] = coefficients[..., 0].real.mean(axis=-1) / (T * window.norm(1))

    centered = coefficients - coefficients.mean(axis=-2, keepdims=True)
    ks = np.arange(-K, K + 1)
    band = np.where(ks[None, None, :] >= 0, centered[..., np.abs(ks)], np.conj(centered[..., np.abs(ks)]))

    if 2 in config.orders:
        spectra[2] = cumulants.power_cumulant(band) / (T * window.norm(2))
    if 3 in config.orders:
        full_ks = np.arange(-2 * K, 2 * K + 1)
        full = np.where(full_ks[None, None, :] >= 0, centered[..., np.abs(full_ks)], np.conj(centered[..., np.abs(full_ks)]))
        spectra[3] = cumulants.bispectrum_cumulant(full, K) / (T * window.norm(3))
    if 4 in config.orders:
        spectra[4] = cumulants.trispectrum_cut_cumulant(band) / (T * window.norm(4))
    return spectra


def _batches(n_frames: int, config: EstimationConfig) -> List[np.ndarray]:
    batches = np.array_split(np.arange(n_frames), config.batch_count)
    smallest = min(len(batch) for batch in batches)
    if smallest < config.frames_per_batch_needed:
        raise errors.InsufficientFramesError(n_frames, config.batch_count * config.frames_per_batch_needed)
    return batches


def _combine(per_batch: List[Dict[int, np.ndarray]], config: EstimationConfig, metadata: Dict[str, Any]) -> SpectraSet:
    B = len(per_batch)
    values: Dict[str, Any] = {}
    for order in config.orders:
        stacked = np.stack([batch[order] for batch in per_batch])
        mean = stacked.mean(axis=0)
        if np.iscomplexobj(stacked):
            sigma = (stacked.real.std(axis=0, ddof=1) + 1j * stacked.imag.std(axis=0, ddof=1)) / np.sqrt(B)
        else:
            sigma = stacked.std(axis=0, ddof=1) / np.sqrt(B)
        if order == 1:
            values["s1"], values["s1_sigma"] = float(mean), float(sigma)
        else:
            values[f"s{order}"], values[f"s{order}_sigma"] = mean, sigma
    return SpectraSet(grid=config.grid, metadata=metadata, **values)


def _realization_generator(seed: int, batch: int, realization: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(batch, realization))))


def estimate_spectra(clicks: ClickRecord, config: EstimationConfig, alpha: Optional[float] = None) -> SpectraSet:
    assert config.frame_length is not None
    frames = segment(clicks, config.frame_length, config.batch_count)
    batches = _batches(len(frames), config)
    window = config.make_window()
    n_coefficients = _coefficient_count(config)
    R = config.resampling_count

    logger.info(f"Estimating orders {config.orders} from {len(clicks)} clicks in {len(frames)} frames, {R} realizations, {config.batch_count} batches.")

    per_batch = []
    for batch_index, frame_indices in enumerate(batches):
        sums: Dict[int, np.ndarray] = {}
        for first in range(0, R, config.realization_chunk):
            realizations = range(first, min(R, first + config.realization_chunk))
            generators = [_realization_generator(config.seed, batch_index, r) for r in realizations]
            coefficients = np.empty((len(generators), len(frame_indices), n_coefficients), dtype=complex)
            for position, frame_index in enumerate(frame_indices):
                times = frames[frame_index]
                weights = _draw_weights(generators, len(times), config.exponential_weights)
                coefficients[:, position, :] = click_fourier(times, weights, config.frame_length, window, n_coefficients).T

            for order, values in _spectra_of_batch(coefficients, config, window).items():
                sums[order] = sums.get(order, 0) + values.sum(axis=0)
        per_batch.append({order: total / R for order, total in sums.items()})
        logger.debug(f"batch {batch_index + 1}/{len(batches)} done")

    metadata = {
        "config": config.to_dictionary(),
        "click_count": len(clicks),
        "duration_s": clicks.duration,
        "frames": len(frames),
        "window_norms": {str(n): window.norm(n) for n in range(1, 5)},
        "rng": RNG_ALGORITHM,
        "source": "clicks"
    }
    if alpha is not None:
        metadata["alpha"] = alpha
    return _combine(per_batch, config, metadata)


def _draw_weights(generators: Sequence[np.random.Generator], count: int, exponential: bool) -> np.ndarray:
    if not exponential:
        return np.ones((count, len(generators)))
    return np.stack([generator.exponential(size=count) for generator in generators], axis=1).reshape(count, len(generators))


def estimate_sampled_spectra(trace: np.ndarray, dt: float, config: EstimationConfig) -> SpectraSet:
    """Same estimator on a uniformly sampled trace (dt in seconds); no resampling."""
    assert config.frame_length is not None
    samples_per_frame = int(round(config.frame_length / dt))
    if samples_per_frame < 1 or abs(samples_per_frame * dt - config.frame_length) > 1e-9 * config.frame_length:
        raise errors.ConfigurationError(f"frame_length {config.frame_length} s is not a multiple of dt {dt} s")
    n_coefficients = _coefficient_count(config)
    if 2 * n_coefficients > samples_per_frame:
        raise errors.ConfigurationError(f"grid exceeds the sampling bandwidth: {n_coefficients} coefficients from {samples_per_frame} samples")

    trace = np.asarray(trace, dtype=float)
    n_frames = len(trace) // samples_per_frame
    if n_frames < config.batch_count:
        raise errors.InsufficientFramesError(n_frames, config.batch_count)
    batches = _batches(n_frames, config)
    window = config.make_window()

    per_batch = []
    for frame_indices in batches:
        coefficients = np.empty((1, len(frame_indices), n_coefficients), dtype=complex)
        for position, frame_index in enumerate(frame_indices):
            frame = trace[frame_index * samples_per_frame:(frame_index + 1) * samples_per_frame]
            coefficients[0, position, :] = sampled_fourier(frame, config.frame_length, window, n_coefficients)
        spectra = _spectra_of_batch(coefficients, config, window)
        per_batch.append({order: values[0] for order, values in spectra.items()})

    metadata = {
        "config": config.to_dictionary(),
        "samples": len(trace),
        "dt_s": dt,
        "frames": n_frames,
        "window_norms": {str(n): window.norm(n) for n in range(1, 5)},
        "source": "sampled"
    }
    return _combine(per_batch, config, metadata)
