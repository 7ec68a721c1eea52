import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from polyclick import errors, guards, utils

logger = logging.getLogger("estimator.clicks")

BINARY_MAGIC = b"PSK1"
DURATION_HEADER = "# duration_s:"
RNG_ALGORITHM = "PCG64"


@dataclass(frozen=True)
class ClickRecord:
    """Photon detection times in seconds, ascending, within [0, duration]."""
    timestamps: np.ndarray
    duration: float

    def __post_init__(self):
        timestamps = np.array(self.timestamps, dtype=float).reshape(-1)
        if np.any(np.isnan(timestamps)) or not np.isfinite(self.duration):
            raise errors.BadInputError("clicks", "contain NaN or infinite values")
        guards.is_nonnegative("duration", self.duration)
        if np.any(np.diff(timestamps) < 0):
            raise errors.BadInputError("clicks", "timestamps must be ascending")
        if len(timestamps) and (timestamps[0] < 0 or timestamps[-1] > self.duration):
            raise errors.BadInputError("clicks", f"timestamps must lie within [0, {self.duration}] s")
        timestamps.setflags(write=False)
        object.__setattr__(self, "timestamps", timestamps)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def rate_khz(self) -> float:
        if self.duration <= 0:
            raise errors.BadInputError("clicks", "record has zero duration")
        return len(self.timestamps) / (self.duration * 1000)


def thin(clicks: ClickRecord, alpha: float, seed: int) -> ClickRecord:
    """Keep each click independently with probability alpha."""
    guards.is_fraction("alpha", alpha)
    if alpha == 1:
        return clicks

    generator = np.random.Generator(np.random.PCG64(seed))
    kept = generator.random(len(clicks)) < alpha
    logger.debug(f"thin: kept {np.count_nonzero(kept)} of {len(clicks)} clicks (alpha = {alpha})")
    return ClickRecord(clicks.timestamps[kept], clicks.duration)


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def is_binary(path: Path) -> bool:
    return path.suffix == ".bin"


def write_clicks(path: Path, clicks: ClickRecord, metadata: Optional[Dict[str, Any]] = None, force: bool = False):
    guards.can_write(path, force)

    if is_binary(path):
        payload = BINARY_MAGIC + struct.pack("<Q", len(clicks)) + clicks.timestamps.astype("<f8").tobytes()
        with open(path, "wb") as file:
            file.write(payload)
    else:
        lines = [f"{DURATION_HEADER} {clicks.duration!r}"] + [repr(float(t)) for t in clicks.timestamps]
        utils.write_file(path, "\n".join(lines) + "\n")

    meta = dict(metadata or {})
    meta.update({"duration_s": clicks.duration, "click_count": len(clicks)})
    sidecar = sidecar_path(path)
    guards.can_write(sidecar, force)
    utils.write_json_file(sidecar, meta)
    logger.info(f"Wrote {len(clicks)} clicks to [{path}].")


def read_clicks(path: Path, duration: Optional[float] = None) -> ClickRecord:
    """Reads a text or binary click file. The duration comes from the argument, the sidecar, the header, or the last click."""
    guards.is_file(path)
    header_duration: Optional[float] = None

    if is_binary(path):
        timestamps = _parse_binary(path, utils.read_binary_file(path))
    else:
        timestamps, header_duration = _parse_text(path, utils.read_text_file(path))

    if duration is None:
        sidecar = sidecar_path(path)
        if sidecar.is_file():
            duration = float(utils.read_json_file(sidecar)["duration_s"])
        elif header_duration is not None:
            duration = header_duration
        else:
            duration = float(timestamps[-1]) if len(timestamps) else 0.0

    if np.any(np.diff(timestamps) < 0):
        raise errors.ClickFileError(str(path), "timestamps are not ascending")
    try:
        clicks = ClickRecord(timestamps, duration)
    except errors.BadInputError as err:
        raise errors.ClickFileError(str(path), str(err)) from None

    logger.info(f"Read {len(clicks)} clicks over {clicks.duration} s from [{path}].")
    return clicks


def _parse_text(path: Path, text: str):
    header_duration = None
    values = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith(DURATION_HEADER):
            header_duration = _to_float(path, number, line[len(DURATION_HEADER):])
            continue
        if line.startswith("#"):
            continue
        values.append(_to_float(path, number, line))
    return np.asarray(values, dtype=float), header_duration


def _to_float(path: Path, number: int, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise errors.ClickFileError(str(path), f"line {number}: [{text.strip()}] is not a number") from None
    if not np.isfinite(value):
        raise errors.ClickFileError(str(path), f"line {number}: non-finite timestamp")
    return value


def _parse_binary(path: Path, payload: bytes) -> np.ndarray:
    if payload[:4] != BINARY_MAGIC:
        raise errors.ClickFileError(str(path), "missing PSK1 magic")
    if len(payload) < 12:
        raise errors.ClickFileError(str(path), "truncated header")
    (count,) = struct.unpack("<Q", payload[4:12])
    body = payload[12:]
    if len(body) != 8 * count:
        raise errors.ClickFileError(str(path), f"expected {count} timestamps, found {len(body) // 8}")
    timestamps = np.frombuffer(body, dtype="<f8").astype(float)
    if not np.all(np.isfinite(timestamps)):
        raise errors.ClickFileError(str(path), "non-finite timestamp")
    return timestamps
