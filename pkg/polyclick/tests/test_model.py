import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyclick import errors
from polyclick.model import (DensityMatrix, EmitterParams, build_emitter_liouvillian, build_telegraph_system,
                             decompose, dissipator, measured_liouvillian, measurement_superops, steady_state)
from polyclick.model.core import (LindbladSystem, basis_matrix, classical_generator, is_markov, jump_terms,
                                  propagate, trace_row, unvectorize, vectorize)
from polyclick.model.emitter import detector_operator, electron_operator, photon_operator
from polyclick.model.model_file import load_model, save_model
from polyclick.tests.utils import MyTestCase

logging.basicConfig(level=logging.INFO)

FIG_PARAMS = EmitterParams(gamma_in=0.27, gamma_out=0.8, gamma_ph=298, gamma_det=5000, beta_sq=25000)

rates = st.floats(min_value=1e-2, max_value=1e3, allow_nan=False, allow_infinity=False)


def random_rates_system(generator: np.random.Generator, dim: int) -> LindbladSystem:
    pairs = []
    for row in range(dim):
        for column in range(dim):
            if row != column:
                pairs.append((basis_matrix(dim, row, column), float(generator.uniform(0.01, 10))))
    return LindbladSystem(dim=dim, jumps=jump_terms(pairs), measurement=basis_matrix(dim, dim - 1, dim - 1))


def test_vectorize_is_column_stacking():
    A = np.arange(4).reshape(2, 2) + 1j
    X = np.array([[1, 2], [3, 4]], dtype=complex)
    B = np.array([[0, 1], [1, 1]], dtype=complex)
    assert np.allclose(vectorize(X), [1, 3, 2, 4])
    assert np.allclose(np.kron(B.T, A) @ vectorize(X), vectorize(A @ X @ B))
    assert np.allclose(unvectorize(vectorize(X), 2), X)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-2, max_value=2, allow_nan=False), min_size=18, max_size=18))
def test_dissipator_annihilates_trace(entries):
    values = np.asarray(entries)
    d = (values[:9] + 1j * values[9:]).reshape(3, 3)
    D = dissipator(d)
    assert np.allclose(trace_row(3) @ D.matrix, 0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(rates, rates, rates, rates)
def test_emitter_liouvillian_preserves_trace(gamma_in, gamma_out, gamma_ph, beta_sq):
    params = EmitterParams(gamma_in, gamma_out, gamma_ph, 100 * gamma_ph, beta_sq)
    L = build_emitter_liouvillian(params).liouvillian()
    for row in range(4):
        for column in range(4):
            assert abs(np.trace(L.apply(basis_matrix(4, row, column)))) < 1e-9 * max(1.0, gamma_ph * 100)


def test_emitter_operators():
    assert np.allclose(photon_operator(), basis_matrix(4, 3, 2))
    assert np.allclose(electron_operator() @ basis_matrix(4, 0, 0) @ electron_operator().conj().T, basis_matrix(4, 2, 2))
    assert np.allclose(detector_operator() @ basis_matrix(4, 3, 3) @ detector_operator().conj().T, basis_matrix(4, 2, 2))


def test_steady_state_random_rate_sets():
    generator = np.random.Generator(np.random.PCG64(1))
    for _ in range(100):
        sys = random_rates_system(generator, 3)
        L = sys.liouvillian()
        rho0 = steady_state(L)
        assert abs(np.trace(rho0.entries) - 1) < 1e-10
        assert np.max(np.abs(L.matrix @ rho0.vector())) < 1e-8
        assert np.all(rho0.probabilities >= 0)


def test_telegraph_steady_state():
    sys = build_telegraph_system(0.27, 0.8)
    rho0 = steady_state(sys.liouvillian())
    assert rho0.markov
    assert rho0.probabilities[1] == pytest.approx(0.8 / 1.07, rel=1e-12)
    assert rho0.probabilities[0] == pytest.approx(0.27 / 1.07, rel=1e-12)


def test_emitter_steady_state_marginal():
    rho0 = steady_state(build_emitter_liouvillian(FIG_PARAMS).liouvillian())
    p = rho0.probabilities
    # the charge occupation ignores the photon layer
    assert p[2] + p[3] == pytest.approx(0.8 / 1.07, rel=1e-9)
    assert p[0] + p[1] == pytest.approx(0.27 / 1.07, rel=1e-9)


def test_degenerate_steady_state():
    sys = build_telegraph_system(0.0, 0.0)
    with pytest.raises(errors.DegenerateSteadyStateError):
        decompose(sys.liouvillian())


def test_decomposition_reconstructs():
    L = measured_liouvillian(build_emitter_liouvillian(FIG_PARAMS))
    decomposition = decompose(L)
    assert decomposition.residual < 1e-8
    assert decomposition.eigenvalues[decomposition.zero_index] == 0
    assert np.trace(unvectorize(decomposition.steady_vector(), 4)) == pytest.approx(1)
    assert np.all(decomposition.eigenvalues.real[decomposition.nonzero_indices()] < 0)


def test_measured_liouvillian_matches_on_diagonal():
    sys = build_emitter_liouvillian(FIG_PARAMS)
    L = sys.liouvillian()
    L_prime = measured_liouvillian(sys)
    for j in range(4):
        basis = basis_matrix(4, j, j)
        assert np.allclose(L_prime.apply(basis), L.apply(basis))
    # coherences dephase at an extra beta^2 / 2
    coherence = basis_matrix(4, 0, 1)
    assert not np.allclose(L_prime.apply(coherence), L.apply(coherence))


def test_classical_generator():
    sys = build_telegraph_system(0.27, 0.8)
    W = classical_generator(sys.liouvillian())
    assert np.allclose(W, [[-0.8, 0.27], [0.8, -0.27]])
    assert np.allclose(W.sum(axis=0), 0)
    assert is_markov(sys.liouvillian())


def test_propagate_relaxes_to_steady_state():
    sys = build_telegraph_system(0.27, 0.8)
    L = sys.liouvillian()
    start = DensityMatrix.from_probabilities([1.0, 0.0])
    relaxed = propagate(L, start, 100.0)
    assert np.allclose(np.diag(relaxed).real, steady_state(L).probabilities, atol=1e-12)

    # occupation marginal follows exp(-Gamma tau)
    tau = 0.5
    after = propagate(L, start, tau)
    p_bright = 0.8 / 1.07 * (1 - np.exp(-1.07 * tau))
    assert after[1, 1].real == pytest.approx(p_bright, rel=1e-10)


def test_measurement_superops():
    sys = build_telegraph_system(0.27, 0.8, beta_sq=2.0)
    rho0 = steady_state(sys.liouvillian())
    measurement, centered = measurement_superops(sys, rho0)
    assert np.trace(measurement.apply(rho0.entries)).real == pytest.approx(0.8 / 1.07)
    assert abs(np.trace(centered.apply(rho0.entries))) < 1e-14

    with pytest.raises(errors.BadInputError):
        measurement_superops(sys, DensityMatrix.from_probabilities([0.2, 0.3, 0.5]))


def test_density_matrix_validation():
    with pytest.raises(errors.BadInputError):
        DensityMatrix(np.diag([0.5, 0.6]))
    with pytest.raises(errors.BadInputError):
        DensityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(errors.BadInputError):
        EmitterParams(-0.1, 0.8, 298, 5000, 25000)


def test_occupation_marginal_ignores_photon_terms():
    with_photons = build_emitter_liouvillian(FIG_PARAMS).liouvillian()
    without = build_emitter_liouvillian(EmitterParams(0.27, 0.8, 0.0, 0.0, 25000)).liouvillian()
    start = DensityMatrix.from_probabilities([0.1, 0.2, 0.3, 0.4])
    for tau in [1e-3, 0.1, 1.0, 5.0]:
        p = np.diag(propagate(with_photons, start, tau)).real
        q = np.diag(propagate(without, start, tau)).real
        assert p[0] + p[1] == pytest.approx(q[0] + q[1], abs=1e-10)
        assert p[2] + p[3] == pytest.approx(q[2] + q[3], abs=1e-10)


def test_emitter_without_photons_reduces_to_telegraph():
    emitter = build_emitter_liouvillian(EmitterParams(0.27, 0.8, 0.0, 0.0, 1.0))
    W = classical_generator(emitter.liouvillian())
    telegraph = classical_generator(build_telegraph_system(0.27, 0.8).liouvillian())
    occupation = [0, 2]
    detector = [1, 3]
    assert np.allclose(W[np.ix_(occupation, occupation)], telegraph)
    assert np.allclose(W[np.ix_(occupation, detector)], 0)
    assert np.allclose(W[np.ix_(detector, occupation)], 0)


def test_slow_detector_warns_on_request_only(caplog):
    assert not FIG_PARAMS.detector_is_slow
    slow = EmitterParams(0.27, 0.8, 1000, 5000, 25000)
    assert slow.detector_is_slow

    with caplog.at_level(logging.WARNING, logger="model.emitter"):
        EmitterParams(0.27, 0.8, 1000, 5000, 25000)
        FIG_PARAMS.warn_if_slow_detector()
    assert not caplog.records

    with caplog.at_level(logging.WARNING, logger="model.emitter"):
        slow.warn_if_slow_detector()
    assert len(caplog.records) == 1
    assert "not much faster" in caplog.records[0].getMessage()


class ModelFileTestCase(MyTestCase):
    def test_load_model(self):
        sys = load_model(self.testdata / "model_telegraph.json")
        reference = build_telegraph_system(0.27, 0.8)
        assert sys.dim == 2
        assert np.allclose(sys.liouvillian().matrix, reference.liouvillian().matrix)
        assert np.allclose(sys.measurement, reference.measurement)

    def test_save_and_load(self):
        path = self.testdata_out / "emitter_model.json"
        sys = build_emitter_liouvillian(FIG_PARAMS)
        save_model(path, sys)
        loaded = load_model(path)
        assert loaded.beta_sq == FIG_PARAMS.beta_sq
        assert np.allclose(loaded.liouvillian().matrix, sys.liouvillian().matrix)
