import unittest
from pathlib import Path

import numpy as np

from polyclick import utils
from polyclick.estimator.clicks import ClickRecord


class MyTestCase(unittest.TestCase):
    def setUp(self):
        self.testdata = Path(__file__).parent.joinpath("testdata")
        self.testdata_out = Path(__file__).parent.joinpath("testdata-out")

        utils.ensure_folder(self.testdata_out)


def poisson_clicks(rate_khz: float, duration: float, seed: int) -> ClickRecord:
    """Homogeneous Poisson record: rate in kHz, duration in seconds."""
    generator = np.random.Generator(np.random.PCG64(seed))
    count = generator.poisson(rate_khz * duration * 1000)
    return ClickRecord(np.sort(generator.uniform(0, duration, count)), duration)


def fraction_within(values: np.ndarray, expected: np.ndarray, sigma: np.ndarray, n_sigma: float) -> float:
    values, expected, sigma = np.broadcast_arrays(np.asarray(values), np.asarray(expected), np.asarray(sigma))
    return float(np.mean(np.abs(values - expected) <= n_sigma * sigma))
