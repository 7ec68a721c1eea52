import json
import logging
import pathlib
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import toml

from polyclick import errors

logger = logging.getLogger("utils")


class ObjectEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if hasattr(obj, "to_dictionary"):
            return obj.to_dictionary()
        return json.JSONEncoder.default(self, obj)


def ensure_folder(folder: Union[str, Path]):
    pathlib.Path(folder).mkdir(parents=True, exist_ok=True)


def read_binary_file(path: Path) -> bytes:
    try:
        with open(path, 'rb') as binary_file:
            return binary_file.read()
    except Exception as err:
        raise errors.BadFile(str(path), err) from None


def read_text_file(path: Path) -> str:
    try:
        with open(path, 'r') as text_file:
            return text_file.read()
    except Exception as err:
        raise errors.BadFile(str(path), err) from None


def write_file(file_path: Path, text: str):
    with open(file_path, "w") as file:
        return file.write(text)


def read_toml_file(filename: Union[str, Path]) -> Dict[str, Any]:
    try:
        return toml.load(str(filename))
    except (OSError, toml.TomlDecodeError) as err:
        raise errors.BadFile(str(filename), err) from None


def read_json_file(filename: Union[str, Path]) -> Dict[str, Any]:
    data: Dict[str, Any]
    try:
        with open(filename) as f:
            data = json.load(f)
    except (OSError, ValueError) as err:
        raise errors.BadFile(str(filename), err) from None
    return data


def write_json_file(filename: Union[str, Path], data: Any):
    with open(filename, "w") as f:
        json.dump(data, f, indent=4, cls=ObjectEncoder)
        f.write("\n")


def complex_to_pairs(values: np.ndarray) -> Dict[str, Any]:
    values = np.asarray(values)
    return {"real": values.real.tolist(), "imag": values.imag.tolist()}


def pairs_to_complex(data: Dict[str, Any]) -> np.ndarray:
    return np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
