"""
Synthetic click records for the blinking emitter.

The fast path draws the bright/dark occupation as a two-state jump process
and places Poisson clicks inside the bright intervals, which is the
emitter's click statistics in the limit of an instantaneous detector. The
exact path runs the four-state jump process, detector dead time included.

Rates are in kHz and times in seconds at the boundary; internally ms.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from polyclick import errors, guards, utils
from polyclick.estimator.clicks import RNG_ALGORITHM, ClickRecord
from polyclick.model.core import steady_state
from polyclick.model.emitter import EmitterParams, build_emitter_liouvillian

logger = logging.getLogger("simulator")

Seed = Union[int, np.random.SeedSequence]

BRIGHT = 1
DARK = 0
RENDER_RESOLUTION_WARNING = 0.1
CLICK_TRANSITION = (2, 3)


def _generator(seed: Seed) -> np.random.Generator:
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(sequence))


@dataclass(frozen=True)
class OccupationPath:
    """Alternating bright/dark history: the state flips at each switch time (seconds)."""
    switch_times: np.ndarray
    initial_state: int
    duration: float

    def __post_init__(self):
        times = np.asarray(self.switch_times, dtype=float)
        if np.any(np.diff(times) < 0) or (len(times) and (times[0] < 0 or times[-1] > self.duration)):
            raise errors.BadInputError("switch_times", "must be ascending within the duration")
        object.__setattr__(self, "switch_times", times)

    def boundaries(self) -> np.ndarray:
        return np.concatenate(([0.0], self.switch_times, [self.duration]))

    def states(self) -> np.ndarray:
        """State of each interval between consecutive boundaries."""
        flips = np.arange(len(self.switch_times) + 1) % 2
        return np.where(flips == 0, self.initial_state, 1 - self.initial_state)

    def intervals(self, state: int = BRIGHT) -> np.ndarray:
        edges = self.boundaries()
        mask = self.states() == state
        return np.column_stack((edges[:-1][mask], edges[1:][mask]))

    def time_in(self, state: int = BRIGHT) -> float:
        intervals = self.intervals(state)
        return float(np.sum(intervals[:, 1] - intervals[:, 0]))

    def bright_fraction(self) -> float:
        return self.time_in(BRIGHT) / self.duration if self.duration > 0 else 0.0

    def dwell_times(self, state: int = BRIGHT) -> np.ndarray:
        """Completed dwells; the last interval is cut by the end of the record and left out."""
        edges = self.boundaries()
        lengths = np.diff(edges)[:-1]
        return lengths[self.states()[:-1] == state]

    def state_at(self, time: float) -> int:
        flips = int(np.searchsorted(self.switch_times, time, side="right"))
        return self.initial_state if flips % 2 == 0 else 1 - self.initial_state


@dataclass(frozen=True)
class RenderedTrace:
    """Detector signal z(t) / beta^2, one value per bin of width dt (seconds)."""
    values: np.ndarray
    dt: float
    beta_sq: float

    def detector_output(self) -> np.ndarray:
        return self.beta_sq * self.values

    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.values))


def simulate_occupation(gamma_in: float, gamma_out: float, duration: float, seed: Seed) -> OccupationPath:
    """Bright dwells last Exp(gamma_in), dark dwells Exp(gamma_out); start drawn from the steady state."""
    guards.is_positive("gamma_in", gamma_in)
    guards.is_positive("gamma_out", gamma_out)
    guards.is_nonnegative("duration", duration)

    generator = _generator(seed)
    p_bright = gamma_out / (gamma_in + gamma_out)
    initial_state = BRIGHT if generator.random() < p_bright else DARK

    duration_ms = duration * 1000
    exit_rates = {BRIGHT: gamma_in, DARK: gamma_out}
    # Even block length keeps the state at the start of every block unchanged.
    expected = duration_ms * 2 * gamma_in * gamma_out / (gamma_in + gamma_out)
    block = 2 * (int(expected) // 2 + 32)
    rates = np.where(np.arange(block) % 2 == 0, exit_rates[initial_state], exit_rates[1 - initial_state])

    chunks = []
    elapsed = 0.0
    while elapsed < duration_ms:
        switches = elapsed + np.cumsum(generator.exponential(1 / rates))
        chunks.append(switches)
        elapsed = switches[-1]

    switch_times = np.concatenate(chunks) if chunks else np.empty(0)
    switch_times = switch_times[switch_times < duration_ms] / 1000
    logger.debug(f"occupation: {len(switch_times)} switches in {duration} s, initial state {initial_state}")
    return OccupationPath(switch_times, initial_state, duration)


def simulate_clicks(path: OccupationPath, gamma_ph: float, seed: Seed) -> ClickRecord:
    """Poisson clicks at gamma_ph inside the bright intervals: Poisson counts, uniform positions."""
    guards.is_positive("gamma_ph", gamma_ph)
    generator = _generator(seed)

    intervals = path.intervals(BRIGHT)
    starts = intervals[:, 0]
    lengths = intervals[:, 1] - intervals[:, 0]
    counts = generator.poisson(gamma_ph * lengths * 1000)
    positions = generator.random(int(np.sum(counts)))
    timestamps = np.repeat(starts, counts) + positions * np.repeat(lengths, counts)
    timestamps = np.minimum(np.sort(timestamps), path.duration)

    logger.debug(f"clicks: {len(timestamps)} over {path.time_in(BRIGHT):.6g} s bright time")
    return ClickRecord(timestamps, path.duration)


def simulate_record(params: EmitterParams, duration: float, seed: int, exact: bool = False) -> Tuple[ClickRecord, Optional[OccupationPath]]:
    """Clicks for the given emitter; the occupation path comes along on the fast path only."""
    params.warn_if_slow_detector()
    if exact:
        return simulate_emitter_jumps(params, duration, seed), None

    occupation_seed, click_seed = np.random.SeedSequence(seed).spawn(2)
    path = simulate_occupation(params.gamma_in, params.gamma_out, duration, occupation_seed)
    clicks = simulate_clicks(path, params.gamma_ph, click_seed)
    logger.info(f"Simulated {len(clicks)} clicks in {duration} s (bright fraction {path.bright_fraction():.4f}).")
    return clicks, path


def simulate_emitter_jumps(params: EmitterParams, duration: float, seed: Seed, block: int = 65536) -> ClickRecord:
    """
    Exact jump process of the four-state emitter. A click is recorded at
    every 3 -> 4 transition (photon enters the detector). Runs one event at
    a time, so it suits short records used for validation.
    """
    guards.is_nonnegative("duration", duration)
    generator = _generator(seed)

    # (target, rate) per source state, from the emitter's jump operators.
    transitions = {
        0: [(2, params.gamma_out)],
        1: [(3, params.gamma_out), (0, params.gamma_det)],
        2: [(0, params.gamma_in), (3, params.gamma_ph)],
        3: [(1, params.gamma_in), (2, params.gamma_det)]
    }
    exit_rates = {state: sum(rate for _, rate in moves) for state, moves in transitions.items()}
    if any(rate <= 0 for rate in exit_rates.values()):
        raise errors.BadInputError("params", "every emitter state needs a positive exit rate")

    probabilities = steady_state(build_emitter_liouvillian(params).liouvillian()).probabilities
    state = int(generator.choice(4, p=probabilities / probabilities.sum()))

    duration_ms = duration * 1000
    elapsed = 0.0
    clicks = []
    waits = generator.exponential(size=block)
    picks = generator.random(block)
    cursor = 0
    while True:
        if cursor == block:
            waits = generator.exponential(size=block)
            picks = generator.random(block)
            cursor = 0
        elapsed += waits[cursor] / exit_rates[state]
        if elapsed >= duration_ms:
            break
        threshold = picks[cursor] * exit_rates[state]
        cursor += 1
        for target, rate in transitions[state]:
            threshold -= rate
            if threshold < 0:
                break
        if (state, target) == CLICK_TRANSITION:
            clicks.append(elapsed)
        state = target

    logger.info(f"Simulated {len(clicks)} clicks in {duration} s with the four-state jump process.")
    return ClickRecord(np.asarray(clicks) / 1000, duration)


def render_trace(clicks: ClickRecord, gamma_det: float, beta_sq: float, dt: float, seed: Seed, clip: bool = True) -> RenderedTrace:
    """
    Each click becomes a unit box of length Exp(gamma_det). Bins hold the
    exact covered fraction of their width; with `clip` overlapping boxes
    count once, otherwise they add up.
    """
    guards.is_positive("gamma_det", gamma_det)
    guards.is_positive("dt", dt)
    guards.is_nonnegative("beta_sq", beta_sq)

    dt_ms = dt * 1000
    if dt_ms * gamma_det > RENDER_RESOLUTION_WARNING:
        logger.warning(f"dt = {dt} s is not much smaller than the mean pulse length 1/gamma_det = {1 / gamma_det} ms.")

    n_bins = int(np.floor(clicks.duration / dt * (1 + 1e-12)))
    generator = _generator(seed)
    starts = clicks.timestamps * 1000
    ends = starts + generator.exponential(1 / gamma_det, size=len(starts))
    if clip:
        starts, ends = _merge_intervals(starts, ends)

    values = _coverage(starts / dt_ms, ends / dt_ms, n_bins)
    if clip:
        values = np.minimum(values, 1.0)
    return RenderedTrace(values, dt, beta_sq)


def _merge_intervals(starts: np.ndarray, ends: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if len(starts) == 0:
        return starts, ends
    order = np.argsort(starts, kind="stable")
    starts, ends = starts[order], ends[order]
    reach = np.maximum.accumulate(ends)
    opens = np.concatenate(([True], starts[1:] > reach[:-1]))
    closes = np.concatenate((opens[1:], [True]))
    return starts[opens], reach[closes]


def _coverage(starts: np.ndarray, ends: np.ndarray, n_bins: int) -> np.ndarray:
    """Covered fraction of each unit bin [j, j+1) by intervals given in bin units."""
    first = np.floor(starts).astype(np.int64)
    last = np.floor(ends).astype(np.int64)
    same = first == last

    partial = np.zeros(n_bins + 2)
    full = np.zeros(n_bins + 2)
    limit = n_bins + 1

    np.add.at(partial, np.minimum(first[same], limit), (ends - starts)[same])
    spread = ~same
    np.add.at(partial, np.minimum(first[spread], limit), (first + 1 - starts)[spread])
    np.add.at(partial, np.minimum(last[spread], limit), (ends - last)[spread])
    np.add.at(full, np.minimum(first[spread] + 1, limit), 1.0)
    np.add.at(full, np.minimum(last[spread], limit), -1.0)

    return (np.cumsum(full) + partial)[:n_bins]


def write_occupation(path: Path, occupation: OccupationPath, force: bool = False):
    """Two columns: time in seconds and the state entered at that time (1 bright, 0 dark)."""
    guards.can_write(path, force)
    times = np.concatenate(([0.0], occupation.switch_times))
    states = occupation.states()
    lines = ["# time_s state"] + [f"{time!r} {state}" for time, state in zip(times.tolist(), states.tolist())]
    utils.write_file(path, "\n".join(lines) + "\n")
    logger.info(f"Wrote occupation path with {len(occupation.switch_times)} switches to [{path}].")


def simulation_metadata(params: EmitterParams, duration: float, seed: int, exact: bool) -> Dict[str, Any]:
    return {
        "generator": "four_state_jumps" if exact else "occupation_poisson",
        "params": params.to_dictionary(),
        "duration_s": duration,
        "seed": seed,
        "rng": RNG_ALGORITHM
    }
