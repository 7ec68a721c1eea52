from pathlib import Path

import numpy as np

from polyclick import errors


def is_file(input: Path):
    if not input.is_file():
        raise errors.BadInputError(str(input), "is not a valid file")


def can_write(output: Path, force: bool):
    if output.exists() and not force:
        raise errors.OutputExistsError(str(output))


def is_nonnegative(name: str, value: float):
    if not np.isfinite(value) or value < 0:
        raise errors.BadInputError(name, f"must be a finite nonnegative number, got {value}")


def is_positive(name: str, value: float):
    if not np.isfinite(value) or value <= 0:
        raise errors.BadInputError(name, f"must be a finite positive number, got {value}")


def is_fraction(name: str, value: float):
    if not (0 < value <= 1):
        raise errors.BadInputError(name, f"must lie in (0, 1], got {value}")


def is_square(name: str, matrix: np.ndarray, dim: int):
    if matrix.shape != (dim, dim):
        raise errors.BadInputError(name, f"expected shape ({dim}, {dim}), got {matrix.shape}")
