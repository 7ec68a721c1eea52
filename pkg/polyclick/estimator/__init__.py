from polyclick.estimator.clicks import ClickRecord, read_clicks, thin, write_clicks
from polyclick.estimator.core import (EstimationConfig, SpectraSet, click_fourier, estimate_sampled_spectra,
                                      estimate_spectra, sampled_fourier, segment)
from polyclick.estimator.cumulants import cumulant, joint_cumulant
from polyclick.estimator.windows import Window

__all__ = ["ClickRecord", "read_clicks", "thin", "write_clicks",
           "EstimationConfig", "SpectraSet", "click_fourier", "estimate_sampled_spectra", "estimate_spectra",
           "sampled_fourier", "segment", "cumulant", "joint_cumulant", "Window"]
