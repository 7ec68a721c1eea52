import logging
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from polyclick import errors, utils
from polyclick.model.core import JumpTerm, LindbladSystem
from polyclick.spectra_file import FORMAT_VERSION, check_format_version

logger = logging.getLogger("model.file")


def _matrix_to_json(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(entry.real), float(entry.imag)] for entry in row] for row in np.asarray(matrix, dtype=complex)]


def _matrix_from_json(data: List[List[Any]], name: str) -> np.ndarray:
    try:
        rows = []
        for row in data:
            rows.append([complex(entry[0], entry[1]) if isinstance(entry, list) else complex(entry) for entry in row])
        return np.array(rows, dtype=complex)
    except (TypeError, IndexError, ValueError) as err:
        raise errors.BadInputError(name, f"is not a matrix of numbers or [re, im] pairs ({err})") from None


def model_to_dictionary(sys: LindbladSystem) -> Dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "model",
        "dim": sys.dim,
        "jumps": [{"matrix": _matrix_to_json(jump.operator), "rate_khz": jump.rate} for jump in sys.jumps],
        "measurement": _matrix_to_json(sys.measurement),
        "beta_sq": sys.beta_sq
    }


def model_from_dictionary(data: Dict[str, Any]) -> LindbladSystem:
    try:
        jumps = [JumpTerm(_matrix_from_json(jump["matrix"], "jump matrix"), float(jump["rate_khz"])) for jump in data["jumps"]]
        measurement = _matrix_from_json(data["measurement"], "measurement")
        return LindbladSystem(dim=int(data["dim"]), jumps=tuple(jumps), measurement=measurement, beta_sq=float(data["beta_sq"]))
    except KeyError as err:
        raise errors.BadInputError("model", f"missing field {err}") from None


def load_model(path: Path) -> LindbladSystem:
    data = utils.read_json_file(path)
    check_format_version(path, data)
    sys = model_from_dictionary(data)
    logger.info(f"Loaded {sys.dim}-state model with {len(sys.jumps)} jumps from [{path}].")
    return sys


def save_model(path: Path, sys: LindbladSystem):
    utils.write_json_file(path, model_to_dictionary(sys))
    logger.info(f"Model saved to [{path}].")
