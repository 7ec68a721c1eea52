import logging
import math

import numpy as np
import pytest

from polyclick import errors, utils
from polyclick.estimator import (ClickRecord, EstimationConfig, SpectraSet, Window, click_fourier,
                                 estimate_sampled_spectra, estimate_spectra, sampled_fourier, segment)
from polyclick.model import EmitterParams
from polyclick.polyspectra import emitter_spectra
from polyclick.simulator import render_trace, simulate_record
from polyclick.tests.utils import MyTestCase, fraction_within, poisson_clicks

logging.basicConfig(level=logging.INFO)


def test_config_validation():
    with pytest.raises(errors.ConfigurationError):
        EstimationConfig(n_freq=64)
    with pytest.raises(errors.ConfigurationError):
        EstimationConfig(orders=(2, 5))
    with pytest.raises(errors.ConfigurationError):
        EstimationConfig(batch_count=1)
    with pytest.raises(errors.ConfigurationError):
        EstimationConfig(frame_length=0.06, n_freq=65, max_freq=10.0)
    with pytest.raises(errors.ConfigurationError):
        EstimationConfig(frame_length=None)
    with pytest.raises(errors.UnknownConfigurationError):
        EstimationConfig.from_dictionary({"frame_length": 0.06, "bins": 10})


def test_frame_length_from_max_freq():
    config = EstimationConfig(frame_length=None, max_freq=10.0, n_freq=65)
    assert config.frame_length == pytest.approx(2 * np.pi * 32 / 10000)
    assert config.grid.values[-1] == pytest.approx(10.0)


def test_config_dictionary():
    config = EstimationConfig(orders=(4, 2, 2), seed=9)
    assert config.orders == (2, 4)
    assert config.frames_per_batch_needed == 4
    restored = EstimationConfig.from_dictionary(config.to_dictionary())
    assert restored == config


def test_segment():
    clicks = ClickRecord(np.array([0.001, 0.0125, 0.25, 0.4999]), 0.5)
    frames = segment(clicks, 0.1)
    assert len(frames) == 5
    assert np.allclose(frames[0], [0.001, 0.0125])
    assert len(frames[1]) == 0
    assert np.allclose(frames[2], [0.05])
    assert np.allclose(frames[4], [0.0999])

    # the incomplete tail frame is dropped
    assert len(segment(clicks, 0.3)) == 1

    with pytest.raises(errors.InsufficientFramesError):
        segment(clicks, 0.1, batch_count=10)


def test_click_fourier_is_a_direct_sum():
    window = Window()
    times = np.array([0.001, 0.02, 0.031])
    weights = np.array([1.0, 2.0, 0.5])
    coefficients = click_fourier(times, weights, 0.06, window, 4)
    for k in range(4):
        expected = complex(sum(float(window(t / 0.06)) * b * np.exp(2j * np.pi * k * t / 0.06) for t, b in zip(times, weights)))
        assert coefficients[k] == pytest.approx(expected)

    stacked = click_fourier(times, np.column_stack((weights, 2 * weights)), 0.06, window, 4)
    assert stacked.shape == (4, 2)
    assert np.allclose(stacked[:, 1], 2 * coefficients)


def test_sampled_fourier():
    window = Window("rectangular")
    samples = np.full(100, 3.0)
    coefficients = sampled_fourier(samples, 0.01, window, 5)
    assert coefficients[0] == pytest.approx(3.0 * 10)
    assert np.allclose(coefficients[1:], 0, atol=1e-12)

    with pytest.raises(errors.ConfigurationError):
        sampled_fourier(samples, 0.01, window, 101)


def test_poisson_levels_with_exponential_weights():
    rate = 5.0
    clicks = poisson_clicks(rate, 200.0, seed=11)
    config = EstimationConfig(frame_length=0.01, n_freq=11, resampling_count=20, batch_count=10, seed=3)
    spectra = estimate_spectra(clicks, config)

    assert spectra.orders == (1, 2, 3, 4)
    assert spectra.s2.shape == (11,)
    assert spectra.s3.shape == (11, 11)
    assert spectra.s4.shape == (11, 11)

    assert abs(spectra.s1 - rate) <= 4 * spectra.s1_sigma
    assert fraction_within(spectra.s2, 2 * rate, spectra.s2_sigma, 4) >= 0.8
    assert fraction_within(spectra.s3.real, 6 * rate, spectra.s3_sigma.real, 4) >= 0.8
    assert fraction_within(spectra.s3.imag, 0.0, spectra.s3_sigma.imag, 4) >= 0.8
    assert fraction_within(spectra.s4, 24 * rate, spectra.s4_sigma, 4) >= 0.8
    assert np.mean(spectra.s4) == pytest.approx(24 * rate, rel=0.15)


def test_naive_weights_miss_the_shot_levels():
    rate = 5.0
    clicks = poisson_clicks(rate, 50.0, seed=12)
    config = EstimationConfig(frame_length=0.01, n_freq=11, resampling_count=1, batch_count=10, exponential_weights=False)
    spectra = estimate_spectra(clicks, config)

    assert np.mean(spectra.s2) < 0.75 * 2 * rate
    assert np.mean(spectra.s3.real) < 0.5 * 6 * rate
    assert np.mean(spectra.s4) < 0.5 * 24 * rate


def test_determinism():
    clicks = poisson_clicks(3.0, 5.0, seed=4)
    config = EstimationConfig(frame_length=0.05, n_freq=7, resampling_count=4, batch_count=5, seed=1)
    first = estimate_spectra(clicks, config)
    second = estimate_spectra(clicks, config)
    assert np.array_equal(first.s3, second.s3)
    assert np.array_equal(first.s4_sigma, second.s4_sigma)

    other = estimate_spectra(clicks, EstimationConfig(frame_length=0.05, n_freq=7, resampling_count=4, batch_count=5, seed=2))
    assert not np.array_equal(first.s2, other.s2)

    chunked = estimate_spectra(clicks, EstimationConfig(frame_length=0.05, n_freq=7, resampling_count=4, batch_count=5, seed=1, realization_chunk=3))
    assert np.allclose(chunked.s4, first.s4, rtol=1e-12)


def test_too_short_record():
    clicks = poisson_clicks(3.0, 0.3, seed=4)
    with pytest.raises(errors.InsufficientFramesError):
        estimate_spectra(clicks, EstimationConfig(frame_length=0.06, batch_count=10))
    with pytest.raises(errors.InsufficientFramesError):
        estimate_spectra(clicks, EstimationConfig(frame_length=0.01, batch_count=10, orders=(4,)))


def test_emitter_record_matches_model():
    params = EmitterParams(gamma_in=0.27, gamma_out=0.8, gamma_ph=5.0, gamma_det=1e5, beta_sq=1e5)
    clicks, _ = simulate_record(params, 120.0, seed=21)
    config = EstimationConfig(frame_length=0.1, n_freq=41, orders=(2, 3, 4), resampling_count=20, batch_count=10, seed=5)
    spectra = estimate_spectra(clicks, config)
    model = emitter_spectra(params, config.grid, orders=(2, 3, 4), include_white_noise=False)

    assert fraction_within(spectra.s2, model.s2, spectra.s2_sigma, 3) >= 0.8
    assert fraction_within(spectra.s3.real, model.s3.real, spectra.s3_sigma.real, 3) >= 0.8
    assert fraction_within(spectra.s3.imag, model.s3.imag, spectra.s3_sigma.imag, 3) >= 0.8
    assert fraction_within(spectra.s4, model.s4, spectra.s4_sigma, 3) >= 0.9


def test_error_bars_shrink_with_the_record_length():
    config = EstimationConfig(frame_length=0.01, n_freq=11, orders=(2, 4), resampling_count=5, batch_count=20, seed=2)
    short = estimate_spectra(poisson_clicks(5.0, 100.0, seed=31), config)
    long = estimate_spectra(poisson_clicks(5.0, 200.0, seed=32), config)

    for order in ["s2_sigma", "s4_sigma"]:
        ratio = np.median(getattr(long, order)) / np.median(getattr(short, order))
        assert ratio == pytest.approx(1 / np.sqrt(2), rel=0.25)


def test_more_realizations_stay_within_the_error_bars():
    clicks = poisson_clicks(5.0, 10.0, seed=13)
    fewer = estimate_spectra(clicks, EstimationConfig(frame_length=0.01, n_freq=11, orders=(1, 2, 4), resampling_count=100, batch_count=10, seed=7))
    more = estimate_spectra(clicks, EstimationConfig(frame_length=0.01, n_freq=11, orders=(1, 2, 4), resampling_count=400, batch_count=10, seed=7))

    assert abs(fewer.s1 - more.s1) <= more.s1_sigma
    assert fraction_within(fewer.s2, more.s2, more.s2_sigma, 1) >= 0.95
    assert fraction_within(fewer.s4, more.s4, more.s4_sigma, 1) >= 0.95


def test_sampled_trace_agrees_with_clicks():
    gamma_det = 20.0
    params = EmitterParams(gamma_in=0.27, gamma_out=0.8, gamma_ph=5.0, gamma_det=1e5, beta_sq=1e5)
    clicks, _ = simulate_record(params, 10.0, seed=8)
    trace = render_trace(clicks, gamma_det, 1.0, 2.5e-6, seed=9, clip=False)

    config = EstimationConfig(frame_length=0.1, n_freq=21, orders=(2,), resampling_count=20, batch_count=10)
    sampled = estimate_sampled_spectra(trace.values, trace.dt, config)
    from_clicks = estimate_spectra(clicks, config)

    assert sampled.metadata["source"] == "sampled"
    combined_sigma = np.sqrt((gamma_det ** 2 * sampled.s2_sigma) ** 2 + from_clicks.s2_sigma ** 2)
    assert fraction_within(gamma_det ** 2 * sampled.s2, from_clicks.s2, combined_sigma, 3) >= 0.8


def test_sampled_estimator_checks_the_grid():
    config = EstimationConfig(frame_length=0.01, n_freq=11, orders=(2,), batch_count=2)
    with pytest.raises(errors.ConfigurationError):
        estimate_sampled_spectra(np.zeros(1000), 0.003, config)
    with pytest.raises(errors.ConfigurationError):
        estimate_sampled_spectra(np.zeros(1000), 0.001, config)


class SpectraSetTestCase(MyTestCase):
    def test_save_and_load(self):
        clicks = poisson_clicks(3.0, 2.0, seed=6)
        config = EstimationConfig(frame_length=0.05, n_freq=7, resampling_count=3, batch_count=4, seed=17)
        spectra = estimate_spectra(clicks, config, alpha=0.5)
        assert spectra.metadata["alpha"] == 0.5
        assert spectra.metadata["frames"] == 40

        path = self.testdata_out / "spectra.json"
        spectra.save(path, force=True)
        loaded = SpectraSet.load(path)
        assert loaded.orders == spectra.orders
        assert loaded.s1 == pytest.approx(spectra.s1)
        assert np.allclose(loaded.s3, spectra.s3)
        assert np.allclose(loaded.s3_sigma, spectra.s3_sigma)
        assert np.allclose(loaded.s4_sigma, spectra.s4_sigma)
        assert loaded.metadata["config"]["seed"] == 17
        assert utils.read_json_file(path)["config"]["n-freq"] == 7
        assert math.isclose(loaded.metadata["window_norms"]["2"], Window().norm(2))

        with pytest.raises(errors.OutputExistsError):
            spectra.save(path)
