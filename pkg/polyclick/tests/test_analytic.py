import logging
import math

import numpy as np
import pytest

from polyclick import errors
from polyclick.model import EmitterParams, build_emitter_liouvillian, build_telegraph_system, steady_state
from polyclick.polyspectra import (FrequencyGrid, ModelSpectra, emitter_spectra, model_spectra, s1, s2, s3, s4,
                                   s4_correction_terms, s4_correction_terms_by_quadrature)
from polyclick.tests.utils import MyTestCase

logging.basicConfig(level=logging.INFO)

GAMMA_IN = 0.27
GAMMA_OUT = 0.8


def telegraph(gamma_in: float = GAMMA_IN, gamma_out: float = GAMMA_OUT, beta_sq: float = 1.0):
    sys = build_telegraph_system(gamma_in, gamma_out, beta_sq)
    return sys, steady_state(sys.liouvillian())


def test_grid_from_frame():
    grid = FrequencyGrid.from_frame(0.06, 65)
    spacing = 2 * np.pi / 60
    assert len(grid) == 65
    assert grid.symmetric
    assert grid.values[33] == pytest.approx(spacing)
    assert grid.values[0] == pytest.approx(-32 * spacing)
    assert grid.nearest_index(0.0) == 32

    with pytest.raises(errors.BadInputError):
        FrequencyGrid.from_frame(0.06, 64)
    with pytest.raises(errors.BadInputError):
        FrequencyGrid.from_frame(0.0, 65)


def test_grid_validation():
    with pytest.raises(errors.BadInputError):
        FrequencyGrid(np.array([1.0, 0.5]))
    with pytest.raises(errors.BadInputError):
        FrequencyGrid(np.array([0.0, np.nan]))
    with pytest.raises(errors.BadInputError):
        FrequencyGrid(np.array([-1.0, 2.0]), symmetric=True)

    grid = FrequencyGrid.default_for(GAMMA_IN, GAMMA_OUT, 16)
    assert grid.values[-1] == pytest.approx(20 * 1.07)
    restored = FrequencyGrid.from_dictionary(grid.to_dictionary())
    assert np.array_equal(restored.values, grid.values)
    assert restored.symmetric


def test_telegraph_s1():
    sys, rho0 = telegraph(beta_sq=3.0)
    assert s1(sys, rho0) == pytest.approx(3.0 * GAMMA_OUT / (GAMMA_IN + GAMMA_OUT), rel=1e-12)


def test_telegraph_lorentzian():
    sys, rho0 = telegraph()
    grid = FrequencyGrid.symmetric_span(10.0, 101)
    gamma = GAMMA_IN + GAMMA_OUT
    p = GAMMA_OUT / gamma
    expected = 2 * p * (1 - p) * gamma / (gamma ** 2 + grid.values ** 2)

    assert np.allclose(s2(sys, rho0, grid, include_white_noise=False), expected, rtol=1e-8, atol=0)
    assert np.allclose(s2(sys, rho0, grid, include_white_noise=True), expected + 0.25, rtol=1e-8, atol=0)


def test_s3_flips_sign_when_rates_swap():
    grid = FrequencyGrid.symmetric_span(5.0, 21)
    sys, rho0 = telegraph()
    swapped_sys, swapped_rho0 = telegraph(GAMMA_OUT, GAMMA_IN)

    forward = s3(sys, rho0, grid)
    backward = s3(swapped_sys, swapped_rho0, grid)
    scale = np.max(np.abs(forward))
    assert scale > 0
    assert np.allclose(forward, -backward, rtol=0, atol=1e-10 * scale)

    s4_forward = s4(sys, rho0, grid)
    s4_backward = s4(swapped_sys, swapped_rho0, grid)
    assert np.allclose(s4_forward, s4_backward, rtol=0, atol=1e-10 * np.max(np.abs(s4_forward)))


def test_symmetric_telegraph_has_no_bispectrum():
    grid = FrequencyGrid.symmetric_span(5.0, 21)
    sys, rho0 = telegraph(0.5, 0.5)
    bispectrum = s3(sys, rho0, grid)
    scale = np.max(s2(sys, rho0, grid, include_white_noise=False))
    assert np.max(np.abs(bispectrum)) < 1e-12 * scale


def test_spectra_scale_with_beta():
    grid = FrequencyGrid.symmetric_span(5.0, 11)
    sys, rho0 = telegraph(beta_sq=1.0)
    scaled_sys, scaled_rho0 = telegraph(beta_sq=7.0)

    base = model_spectra(sys, grid, include_white_noise=False, rho0=rho0)
    scaled = model_spectra(scaled_sys, grid, include_white_noise=False, rho0=scaled_rho0)
    assert scaled.s1 == pytest.approx(7.0 * base.s1, rel=1e-10)
    assert np.allclose(scaled.s2, 7.0 ** 2 * base.s2, rtol=1e-9)
    assert np.allclose(scaled.s3, 7.0 ** 3 * base.s3, rtol=1e-9, atol=1e-12 * np.max(np.abs(scaled.s3)))
    assert np.allclose(scaled.s4, 7.0 ** 4 * base.s4, rtol=1e-9, atol=1e-12 * np.max(np.abs(scaled.s4)))


def close(actual, expected) -> bool:
    return bool(np.allclose(actual, expected, rtol=1e-9, atol=1e-10 * np.max(np.abs(expected))))


def test_emitter_spectra_symmetries():
    params = EmitterParams(gamma_in=0.27, gamma_out=0.8, gamma_ph=30, gamma_det=3000, beta_sq=3000)
    grid = FrequencyGrid.symmetric_span(4.0, 15)
    spectra = emitter_spectra(params, grid, include_white_noise=False)

    assert close(spectra.s2, spectra.s2[::-1])
    assert close(spectra.s3, spectra.s3.T)
    assert close(spectra.s3, np.conj(spectra.s3[::-1, ::-1]))
    assert np.isrealobj(spectra.s4)
    assert close(spectra.s4, spectra.s4.T)
    assert close(spectra.s4, spectra.s4[::-1, :])
    assert spectra.params["include_white_noise"] is False
    # the bright-state photon flux dominates the mean detector output
    assert spectra.s1 == pytest.approx(3000 * 30 / 3030 * 0.8 / 1.07, rel=1e-2)


def test_rescaling_time_scales_the_spectra():
    c = 3.0
    params = EmitterParams(gamma_in=0.27, gamma_out=0.8, gamma_ph=5, gamma_det=50, beta_sq=50)
    faster = EmitterParams(gamma_in=c * 0.27, gamma_out=c * 0.8, gamma_ph=c * 5, gamma_det=c * 50, beta_sq=50)
    grid = FrequencyGrid.symmetric_span(4.0, 11)
    base = emitter_spectra(params, grid, include_white_noise=False)
    scaled = emitter_spectra(faster, FrequencyGrid.symmetric_span(c * 4.0, 11), include_white_noise=False)

    assert scaled.s1 == pytest.approx(base.s1, rel=1e-10)
    assert close(scaled.s2, base.s2 / c)
    assert close(scaled.s3, base.s3 / c ** 2)
    assert close(scaled.s4, base.s4 / c ** 3)


def test_always_bright_emitter_has_shot_levels():
    gamma_ph = 10.0
    gamma_det = 1e5
    params = EmitterParams(gamma_in=0.0, gamma_out=0.8, gamma_ph=gamma_ph, gamma_det=gamma_det, beta_sq=gamma_det)
    rate = 1 / (1 / gamma_ph + 1 / gamma_det)
    grid = FrequencyGrid.symmetric_span(20.0, 9)
    spectra = emitter_spectra(params, grid, include_white_noise=False)

    assert spectra.s1 == pytest.approx(rate, rel=1e-9)
    assert np.allclose(spectra.s2, 2 * rate, rtol=2e-3)
    assert np.allclose(spectra.s3.real, 6 * rate, rtol=2e-3)
    assert np.max(np.abs(spectra.s3.imag)) < 2e-3 * 6 * rate
    assert np.allclose(spectra.s4, 24 * rate, rtol=2e-3)


def test_correction_terms_match_quadrature_on_telegraph():
    sys, rho0 = telegraph()
    for omegas in [(0.3, -0.3, 0.7, -0.7), (1.1, 0.7, -1.1, -0.7), (0.0, 0.0, 0.4, -0.4)]:
        closed = s4_correction_terms(sys, rho0, omegas)
        numeric = s4_correction_terms_by_quadrature(sys, rho0, omegas)
        for exact, integrated in zip(closed, numeric):
            assert integrated == pytest.approx(exact, rel=1e-6, abs=1e-12)


def test_correction_terms_match_quadrature_on_emitter():
    params = EmitterParams(gamma_in=0.27, gamma_out=0.8, gamma_ph=30, gamma_det=3000, beta_sq=3000)
    sys = build_emitter_liouvillian(params)
    rho0 = steady_state(sys.liouvillian())
    omegas = (0.5, -0.5, 1.5, -1.5)
    closed = s4_correction_terms(sys, rho0, omegas)
    numeric = s4_correction_terms_by_quadrature(sys, rho0, omegas)
    scale = max(abs(value) for value in closed)
    for exact, integrated in zip(closed, numeric):
        assert abs(integrated - exact) < 1e-5 * scale


def test_correction_terms_need_four_frequencies():
    sys, rho0 = telegraph()
    with pytest.raises(errors.BadInputError):
        s4_correction_terms(sys, rho0, (0.1, 0.2, 0.3))


def test_degenerate_system_is_rejected():
    sys = build_telegraph_system(0.0, 0.0)
    with pytest.raises(errors.DegenerateSteadyStateError):
        model_spectra(sys, FrequencyGrid.symmetric_span(1.0, 5))


def test_only_requested_orders():
    sys, rho0 = telegraph()
    spectra = model_spectra(sys, FrequencyGrid.symmetric_span(1.0, 5), orders=(2,), rho0=rho0)
    assert spectra.s1 is None and spectra.s3 is None and spectra.s4 is None
    assert spectra.s2 is not None
    assert math.isclose(float(spectra.s2[2]), 2 * 0.8 * 0.27 / 1.07 ** 3 + 0.25, rel_tol=1e-9)


class ModelSpectraFileTestCase(MyTestCase):
    def test_save_and_load(self):
        path = self.testdata_out / "model_spectra.json"
        params = EmitterParams(gamma_in=0.27, gamma_out=0.8, gamma_ph=30, gamma_det=3000, beta_sq=3000)
        spectra = emitter_spectra(params, FrequencyGrid.symmetric_span(4.0, 7))
        spectra.save(path, {"orders": [1, 2, 3, 4]}, force=True)

        loaded = ModelSpectra.load(path)
        assert loaded.s1 == pytest.approx(spectra.s1)
        assert np.allclose(loaded.s2, spectra.s2)
        assert np.allclose(loaded.s3, spectra.s3)
        assert np.allclose(loaded.s4, spectra.s4)
        assert loaded.params["gamma_ph"] == 30

        with pytest.raises(errors.OutputExistsError):
            spectra.save(path)
