"""
Lindblad representation of N-state Markov systems.

Matrices are vectorized by column stacking (numpy order "F"), so that
vec(A X B) = (B^T kron A) vec(X). Every superoperator in the package uses this
convention.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import scipy.linalg

from polyclick import errors, guards

logger = logging.getLogger("model")

HERMITIAN_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-8
ZERO_EIGENVALUE_THRESHOLD = 1e-8
RECONSTRUCTION_TOLERANCE = 1e-8


def vectorize(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix, dtype=complex).flatten(order="F")


def unvectorize(vector: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vector, dtype=complex).reshape((dim, dim), order="F")


def basis_matrix(dim: int, row: int, column: int) -> np.ndarray:
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[row, column] = 1
    return matrix


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    markov: bool = False

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise errors.BadInputError("density matrix", f"must be square, got shape {entries.shape}")
        if not np.allclose(entries, entries.conj().T, atol=HERMITIAN_TOLERANCE):
            raise errors.BadInputError("density matrix", "is not Hermitian")
        if abs(np.trace(entries) - 1) > TRACE_TOLERANCE:
            raise errors.BadInputError("density matrix", f"trace is {np.trace(entries).real}, expected 1")
        if self.markov:
            entries = np.diag(np.diag(entries))
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_probabilities(cls, probabilities: np.ndarray) -> 'DensityMatrix':
        return cls(np.diag(np.asarray(probabilities, dtype=complex)), markov=True)

    @classmethod
    def from_vector(cls, vector: np.ndarray, markov: bool = False) -> 'DensityMatrix':
        dim = int(round(np.sqrt(len(vector))))
        return cls(unvectorize(vector, dim), markov=markov)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.diag(self.entries).real.copy()

    def vector(self) -> np.ndarray:
        return vectorize(self.entries)


@dataclass(frozen=True)
class JumpTerm:
    operator: np.ndarray
    rate: float

    def __post_init__(self):
        operator = np.array(self.operator, dtype=complex)
        guards.is_nonnegative("rate", self.rate)
        if not np.any(operator):
            raise errors.BadInputError("jump operator", "must be nonzero")
        operator.setflags(write=False)
        object.__setattr__(self, "operator", operator)


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        size = matrix.shape[0]
        dim = int(round(np.sqrt(size)))
        if matrix.shape != (size, size) or dim * dim != size:
            raise errors.BadInputError("superoperator", f"expected an N^2 x N^2 matrix, got shape {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, dim: int) -> 'Superoperator':
        return cls(np.eye(dim * dim, dtype=complex))

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvectorize(self.matrix @ vectorize(rho), self.dim)

    def __add__(self, other: 'Superoperator') -> 'Superoperator':
        return Superoperator(self.matrix + other.matrix)

    def __sub__(self, other: 'Superoperator') -> 'Superoperator':
        return Superoperator(self.matrix - other.matrix)

    def scaled(self, factor: complex) -> 'Superoperator':
        return Superoperator(factor * self.matrix)


@dataclass(frozen=True)
class LindbladSystem:
    dim: int
    jumps: Tuple[JumpTerm, ...]
    measurement: np.ndarray
    beta_sq: float = 1.0

    def __post_init__(self):
        measurement = np.array(self.measurement, dtype=complex)
        guards.is_square("measurement", measurement, self.dim)
        guards.is_nonnegative("beta_sq", self.beta_sq)
        for jump in self.jumps:
            guards.is_square("jump operator", jump.operator, self.dim)
        measurement.setflags(write=False)
        object.__setattr__(self, "measurement", measurement)
        object.__setattr__(self, "jumps", tuple(self.jumps))

    def liouvillian(self) -> Superoperator:
        matrix = np.zeros((self.dim ** 2, self.dim ** 2), dtype=complex)
        for jump in self.jumps:
            if jump.rate > 0:
                matrix += jump.rate * dissipator(jump.operator).matrix
        return Superoperator(matrix)


def dissipator(d: np.ndarray) -> Superoperator:
    """D[d] rho = d rho d^dagger - (d^dagger d rho + rho d^dagger d) / 2"""
    d = np.asarray(d, dtype=complex)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise errors.BadInputError("jump operator", f"must be square, got shape {d.shape}")

    identity = np.eye(d.shape[0], dtype=complex)
    number = d.conj().T @ d
    matrix = np.kron(d.conj(), d) - 0.5 * np.kron(identity, number) - 0.5 * np.kron(number.T, identity)
    return Superoperator(matrix)


def is_markov(L: Superoperator) -> bool:
    """Whether L maps diagonal matrices to diagonal matrices."""
    dim = L.dim
    for j in range(dim):
        image = L.apply(basis_matrix(dim, j, j))
        off_diagonal = image - np.diag(np.diag(image))
        if np.max(np.abs(off_diagonal), initial=0) > HERMITIAN_TOLERANCE * max(1.0, np.max(np.abs(image))):
            return False
    return True


def classical_generator(L: Superoperator) -> np.ndarray:
    """Rate matrix W with dp/dt = W p, columns summing to zero."""
    if not is_markov(L):
        raise errors.BadInputError("liouvillian", "does not preserve diagonal matrices")

    dim = L.dim
    generator = np.zeros((dim, dim))
    for j in range(dim):
        generator[:, j] = np.diag(L.apply(basis_matrix(dim, j, j))).real
    return generator


def measured_liouvillian(sys: LindbladSystem) -> Superoperator:
    """L' = L + beta^2 D[A], the generator of the continuously measured system."""
    L = sys.liouvillian()
    L_prime = L + dissipator(sys.measurement).scaled(sys.beta_sq)

    if is_markov(L) and _is_diagonal(sys.measurement):
        scale = max(1.0, float(np.max(np.abs(L.matrix))))
        for j in range(sys.dim):
            basis = basis_matrix(sys.dim, j, j)
            if not np.allclose(L_prime.apply(basis), L.apply(basis), atol=1e-12 * scale):
                raise errors.ProgrammingError("L' differs from L on diagonal matrices")

    return L_prime


def propagate(L: Superoperator, rho: DensityMatrix, tau: float) -> np.ndarray:
    vector = scipy.linalg.expm(L.matrix * tau) @ rho.vector()
    return unvectorize(vector, L.dim)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    zero_index: int
    residual: float = field(default=0.0)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def nonzero_indices(self) -> np.ndarray:
        indices = np.arange(self.size)
        return indices[indices != self.zero_index]

    def steady_vector(self) -> np.ndarray:
        return self.right[:, self.zero_index]


def _zero_eigenvalue_mask(eigenvalues: np.ndarray) -> np.ndarray:
    magnitudes = np.abs(eigenvalues)
    scale = np.max(magnitudes)
    if scale == 0:
        return np.ones(len(eigenvalues), dtype=bool)
    return magnitudes < ZERO_EIGENVALUE_THRESHOLD * scale


def decompose(L: Superoperator) -> SpectralDecomposition:
    eigenvalues, right = scipy.linalg.eig(L.matrix)

    zero_mask = _zero_eigenvalue_mask(eigenvalues)
    if np.count_nonzero(zero_mask) != 1:
        raise errors.DegenerateSteadyStateError(int(np.count_nonzero(zero_mask)))
    zero_index = int(np.flatnonzero(zero_mask)[0])
    eigenvalues = eigenvalues.copy()
    eigenvalues[zero_index] = 0

    dim = L.dim
    trace = np.trace(unvectorize(right[:, zero_index], dim))
    if abs(trace) < TRACE_TOLERANCE:
        raise errors.DegenerateSteadyStateError(0)
    right[:, zero_index] = right[:, zero_index] / trace

    try:
        left = scipy.linalg.inv(right)
    except scipy.linalg.LinAlgError:
        raise errors.DefectiveLiouvillianError(float("inf")) from None

    reconstructed = right @ np.diag(eigenvalues) @ left
    norm = max(float(np.linalg.norm(L.matrix)), np.finfo(float).tiny)
    residual = float(np.linalg.norm(reconstructed - L.matrix)) / norm
    if not np.isfinite(residual) or residual > RECONSTRUCTION_TOLERANCE:
        raise errors.DefectiveLiouvillianError(residual)

    logger.debug(f"decompose: {len(eigenvalues)} modes, residual {residual:.2e}")
    return SpectralDecomposition(eigenvalues, right, left, zero_index, residual)


def steady_state(L: Superoperator) -> DensityMatrix:
    decomposition = decompose(L)
    rho = unvectorize(decomposition.steady_vector(), L.dim)
    rho = (rho + rho.conj().T) / 2

    probabilities = np.diag(rho).real.copy()
    if np.min(probabilities) < -TRACE_TOLERANCE:
        raise errors.ProgrammingError(f"steady state has negative population {np.min(probabilities)}")
    probabilities = np.clip(probabilities, 0, None)

    markov = is_markov(L)
    if markov:
        rho = np.diag(probabilities).astype(complex)
    else:
        np.fill_diagonal(rho, probabilities)
    rho = rho / np.trace(rho).real
    return DensityMatrix(rho, markov=markov)


def measurement_superops(sys: LindbladSystem, rho0: DensityMatrix) -> Tuple[Superoperator, Superoperator]:
    """A x = (A x + x A^dagger) / 2 and A' x = A x - Tr(A rho0) x."""
    if rho0.dim != sys.dim:
        raise errors.BadInputError("rho0", f"dimension {rho0.dim} does not match system dimension {sys.dim}")

    identity = np.eye(sys.dim, dtype=complex)
    A = sys.measurement
    measurement = Superoperator(0.5 * (np.kron(identity, A) + np.kron(A.conj(), identity)))
    expectation = np.trace(measurement.apply(rho0.entries))
    centered = measurement - Superoperator.identity(sys.dim).scaled(expectation)
    return measurement, centered


def trace_row(dim: int) -> np.ndarray:
    """Row vector t with t @ vec(X) = Tr X."""
    return vectorize(np.eye(dim))


def _is_diagonal(matrix: np.ndarray) -> bool:
    return bool(np.all(matrix == np.diag(np.diag(matrix))))


def jump_terms(pairs: List[Tuple[np.ndarray, float]]) -> Tuple[JumpTerm, ...]:
    return tuple(JumpTerm(operator, rate) for operator, rate in pairs)
