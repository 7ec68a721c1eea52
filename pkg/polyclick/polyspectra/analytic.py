"""
Closed-form polyspectra S1..S4 of a continuously measured Lindblad system.

All traces Tr[A' G'(w_a) A' G'(w_b) ... A' rho0] are evaluated in the
eigenbasis of L': with right vectors R and left vectors R^-1,

    G'(w) = R diag(g(w)) R^-1,   g_k(w) = -1 / (lambda_k + i w),   g_0 = 0,

so every trace is a chain u . diag(g) . M . diag(g) ... v with
u = t A' R, M = R^-1 A' R and v = R^-1 A' rho0.
"""

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.integrate

from polyclick import errors, spectra_file, utils
from polyclick.model.core import (DensityMatrix, LindbladSystem, SpectralDecomposition, Superoperator, decompose,
                                  measured_liouvillian, measurement_superops, steady_state, trace_row)
from polyclick.model.emitter import EmitterParams, build_emitter_liouvillian
from polyclick.polyspectra.grid import FrequencyGrid

logger = logging.getLogger("polyspectra")

ALL_ORDERS = (1, 2, 3, 4)
REALNESS_TOLERANCE = 1e-8
PRUNING_TOLERANCE = 1e-12


def resolvent(decomp: SpectralDecomposition, omega: float) -> Superoperator:
    """G'(w) with the stationary mode removed."""
    g = np.zeros(decomp.size, dtype=complex)
    nonzero = decomp.nonzero_indices()
    g[nonzero] = -1.0 / (decomp.eigenvalues[nonzero] + 1j * omega)
    return Superoperator((decomp.right * g[None, :]) @ decomp.left)


class SpectralContext:
    """Eigenbasis data of one system, reduced to the modes that A' rho0 can reach."""

    def __init__(self, sys: LindbladSystem, rho0: Optional[DensityMatrix] = None):
        self.sys = sys
        self.rho0 = rho0 if rho0 is not None else steady_state(sys.liouvillian())
        self.decomposition = decompose(measured_liouvillian(sys))
        self.measurement, self.centered = measurement_superops(sys, self.rho0)

        d = self.decomposition
        centered = self.centered.matrix
        u = trace_row(sys.dim) @ centered @ d.right
        M = d.left @ centered @ d.right
        v = d.left @ centered @ self.rho0.vector()

        modes = self._reachable_modes(M, v, d.zero_index)
        self.eigenvalues = d.eigenvalues[modes]
        self.u = u[modes]
        self.M = M[np.ix_(modes, modes)]
        self.v = v[modes]
        self.s = self.u * self.v
        logger.debug(f"spectral context: kept {len(modes)} of {d.size} modes")

    @staticmethod
    def _reachable_modes(M: np.ndarray, v: np.ndarray, zero_index: int) -> np.ndarray:
        # three A' insertions at most (fourth order), so two hops through M
        v_floor = PRUNING_TOLERANCE * max(np.max(np.abs(v)), np.finfo(float).tiny)
        m_floor = PRUNING_TOLERANCE * max(np.max(np.abs(M)), np.finfo(float).tiny)
        reached = np.abs(v) > v_floor
        reached[zero_index] = False
        for _ in range(2):
            reached = reached | np.any(np.abs(M[:, reached]) > m_floor, axis=1)
            reached[zero_index] = False
        return np.flatnonzero(reached)

    @property
    def expectation(self) -> float:
        return float(np.trace(self.measurement.apply(self.rho0.entries)).real)

    def propagator(self, frequencies: np.ndarray) -> np.ndarray:
        """g_k(w) for every entry of `frequencies`, shape frequencies.shape + (modes,)."""
        frequencies = np.asarray(frequencies, dtype=float)
        unique, inverse = np.unique(frequencies, return_inverse=True)
        values = -1.0 / (self.eigenvalues[None, :] + 1j * unique[:, None])
        return values[inverse.reshape(-1)].reshape(frequencies.shape + (len(self.eigenvalues),))

    def chain(self, frequencies: Sequence[np.ndarray]) -> np.ndarray:
        """Tr[A' G'(f_0) A' G'(f_1) ... A' rho0] for broadcastable frequency arrays."""
        result = self.propagator(frequencies[-1]) * self.v
        for frequency in reversed(frequencies[:-1]):
            result = self.propagator(frequency) * (result @ self.M.T)
        return result @ self.u

    def correction_terms(self, nu1: np.ndarray, nu2: np.ndarray, nu3: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """The two frequency-integral terms of one fourth-order permutation, in closed form."""
        lam_k = self.eigenvalues[:, None]
        lam_l = self.eigenvalues[None, :]
        weights = self.s[:, None] * self.s[None, :]
        nu1 = np.asarray(nu1, dtype=float)[..., None, None]
        nu2 = np.asarray(nu2, dtype=float)[..., None, None]
        nu3 = np.asarray(nu3, dtype=float)[..., None, None]

        pair = lam_k + lam_l + 1j * nu2
        second = weights / ((lam_l + 1j * nu1) * (lam_k + 1j * nu3) * pair)
        third = weights / ((lam_k + 1j * nu1) * (lam_k + 1j * nu3) * pair)
        return second.sum(axis=(-2, -1)), third.sum(axis=(-2, -1))


def _ensure_real(name: str, values: np.ndarray) -> np.ndarray:
    scale = float(np.max(np.abs(values.real), initial=0))
    residue = float(np.max(np.abs(values.imag), initial=0))
    if residue > REALNESS_TOLERANCE * scale + np.finfo(float).tiny:
        raise errors.ProgrammingError(f"{name} has imaginary residue {residue:.3e} against scale {scale:.3e}")
    return values.real.copy()


def _context(sys: LindbladSystem, rho0: Optional[DensityMatrix]) -> SpectralContext:
    return SpectralContext(sys, rho0)


def s1(sys: LindbladSystem, rho0: DensityMatrix) -> float:
    return _s1(_context(sys, rho0))


def s2(sys: LindbladSystem, rho0: DensityMatrix, grid: FrequencyGrid, include_white_noise: bool = True) -> np.ndarray:
    return _s2(_context(sys, rho0), grid, include_white_noise)


def s3(sys: LindbladSystem, rho0: DensityMatrix, grid: FrequencyGrid) -> np.ndarray:
    return _s3(_context(sys, rho0), grid)


def s4(sys: LindbladSystem, rho0: DensityMatrix, grid: FrequencyGrid) -> np.ndarray:
    return _s4(_context(sys, rho0), grid)


def _s1(context: SpectralContext) -> float:
    return context.sys.beta_sq * context.expectation


def _s2(context: SpectralContext, grid: FrequencyGrid, include_white_noise: bool) -> np.ndarray:
    omega = grid.values
    beta_sq = context.sys.beta_sq
    values = beta_sq ** 2 * (context.chain([omega]) + context.chain([-omega]))
    values = _ensure_real("S2", values)
    if include_white_noise:
        values = values + beta_sq / 4
    return values


def _s3(context: SpectralContext, grid: FrequencyGrid) -> np.ndarray:
    w1, w2 = np.meshgrid(grid.values, grid.values, indexing="ij")
    frequencies = (w1, w2, -w1 - w2)

    total = np.zeros(w1.shape, dtype=complex)
    for _, l, m in itertools.permutations(range(3)):
        total += context.chain([frequencies[m], frequencies[m] + frequencies[l]])
    return context.sys.beta_sq ** 3 * total


def _s4(context: SpectralContext, grid: FrequencyGrid) -> np.ndarray:
    w1, w2 = np.meshgrid(grid.values, grid.values, indexing="ij")
    frequencies = (w1, -w1, w2, -w2)

    total = np.zeros(w1.shape, dtype=complex)
    for _, l, m, n in itertools.permutations(range(4)):
        nu3 = frequencies[n]
        nu2 = frequencies[m] + nu3
        nu1 = frequencies[l] + nu2
        second, third = context.correction_terms(nu1, nu2, nu3)
        total += context.chain([nu3, nu2, nu1]) + second + third
    return _ensure_real("S4", context.sys.beta_sq ** 4 * total)


def s4_correction_terms(sys: LindbladSystem, rho0: DensityMatrix, omegas: Sequence[float]) -> Tuple[complex, complex]:
    """Closed form of both integral terms for the ordered frequencies (w_k, w_l, w_m, w_n), without beta prefactor."""
    context = _context(sys, rho0)
    nu1, nu2, nu3 = _partial_sums(omegas)
    second, third = context.correction_terms(np.asarray(nu1), np.asarray(nu2), np.asarray(nu3))
    return complex(second), complex(third)


def s4_correction_terms_by_quadrature(sys: LindbladSystem, rho0: DensityMatrix, omegas: Sequence[float]) -> Tuple[complex, complex]:
    """Same terms as s4_correction_terms, by adaptive quadrature over the full frequency axis."""
    decomposition = decompose(measured_liouvillian(sys))
    _, centered = measurement_superops(sys, rho0)
    A = centered.matrix
    left = trace_row(sys.dim) @ A
    right = A @ rho0.vector()
    nu1, nu2, nu3 = _partial_sums(omegas)

    def G(omega: float) -> np.ndarray:
        return resolvent(decomposition, omega).matrix

    G_nu1 = G(nu1)
    G_nu3 = G(nu3)
    left_nu3 = left @ G_nu3

    def first_integrand(omega: float) -> complex:
        return (left_nu3 @ G(nu2 - omega) @ right) * (left @ G(omega) @ G_nu1 @ right)

    def second_integrand(omega: float) -> complex:
        return (left_nu3 @ G_nu1 @ G(nu2 - omega) @ right) * (left @ G(omega) @ right)

    rates = np.abs(decomposition.eigenvalues[decomposition.nonzero_indices()])
    centers = sorted({0.0, float(nu2)} | set(np.imag(decomposition.eigenvalues)) | set(nu2 - np.imag(decomposition.eigenvalues)))
    first = -_integrate_full_axis(first_integrand, centers, float(np.max(rates))) / (2 * np.pi)
    second = -_integrate_full_axis(second_integrand, centers, float(np.max(rates))) / (2 * np.pi)
    return first, second


def _partial_sums(omegas: Sequence[float]) -> Tuple[float, float, float]:
    if len(omegas) != 4:
        raise errors.BadInputError("omegas", f"expected four frequencies, got {len(omegas)}")
    _, w_l, w_m, w_n = (float(omega) for omega in omegas)
    return w_l + w_m + w_n, w_m + w_n, w_n


def _integrate_full_axis(integrand, centers: Sequence[float], scale: float) -> complex:
    low = min(centers) - 50 * scale
    high = max(centers) + 50 * scale
    breakpoints = [c for c in centers if low < c < high]

    def magnitude(omega: float) -> float:
        return float(abs(integrand(omega)))

    rough, _ = scipy.integrate.quad(magnitude, low, high, points=breakpoints, limit=200, epsrel=1e-3)
    tolerance = 1e-13 * max(rough, np.finfo(float).tiny)

    result = 0j
    for part in (np.real, np.imag):
        def real_valued(omega: float) -> float:
            return float(part(integrand(omega)))

        core, _ = scipy.integrate.quad(real_valued, low, high, points=breakpoints, limit=2000, epsabs=tolerance, epsrel=1e-11)
        lower, _ = scipy.integrate.quad(real_valued, -np.inf, low, limit=2000, epsabs=tolerance, epsrel=1e-11)
        upper, _ = scipy.integrate.quad(real_valued, high, np.inf, limit=2000, epsabs=tolerance, epsrel=1e-11)
        value = core + lower + upper
        result += value if part is np.real else 1j * value
    return result


@dataclass(frozen=True)
class ModelSpectra:
    grid: FrequencyGrid
    s1: Optional[float] = None
    s2: Optional[np.ndarray] = None
    s3: Optional[np.ndarray] = None
    s4: Optional[np.ndarray] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dictionary(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"grid": self.grid.to_dictionary(), "model": self.params}
        if self.s1 is not None:
            data["s1"] = {"value": self.s1}
        if self.s2 is not None:
            data["s2"] = {"value": self.s2.tolist()}
        if self.s3 is not None:
            data["s3"] = utils.complex_to_pairs(self.s3)
        if self.s4 is not None:
            data["s4"] = {"value": self.s4.tolist()}
        return data

    @classmethod
    def from_dictionary(cls, data: Dict[str, Any]) -> 'ModelSpectra':
        return cls(
            grid=FrequencyGrid.from_dictionary(data["grid"]),
            s1=data["s1"]["value"] if "s1" in data else None,
            s2=np.asarray(data["s2"]["value"], dtype=float) if "s2" in data else None,
            s3=utils.pairs_to_complex(data["s3"]) if "s3" in data else None,
            s4=np.asarray(data["s4"]["value"], dtype=float) if "s4" in data else None,
            params=data.get("model", {})
        )

    def save(self, path: Path, config: Optional[Dict[str, Any]] = None, force: bool = False):
        spectra_file.write(path, spectra_file.wrap("model_spectra", self.to_dictionary(), config), force)

    @classmethod
    def load(cls, path: Path) -> 'ModelSpectra':
        return cls.from_dictionary(spectra_file.read(path, "model_spectra"))


def model_spectra(sys: LindbladSystem, grid: FrequencyGrid, orders: Sequence[int] = ALL_ORDERS,
                  include_white_noise: bool = True, params: Optional[Dict[str, Any]] = None,
                  rho0: Optional[DensityMatrix] = None) -> ModelSpectra:
    context = _context(sys, rho0)
    return ModelSpectra(
        grid=grid,
        s1=_s1(context) if 1 in orders else None,
        s2=_s2(context, grid, include_white_noise) if 2 in orders else None,
        s3=_s3(context, grid) if 3 in orders else None,
        s4=_s4(context, grid) if 4 in orders else None,
        params=params if params is not None else {"dim": sys.dim, "beta_sq": sys.beta_sq}
    )


def emitter_spectra(params: EmitterParams, grid: FrequencyGrid, orders: Sequence[int] = ALL_ORDERS,
                    include_white_noise: bool = True) -> ModelSpectra:
    sys = build_emitter_liouvillian(params)
    description = dict(params.to_dictionary(), include_white_noise=include_white_noise)
    return model_spectra(sys, grid, orders, include_white_noise, description)
