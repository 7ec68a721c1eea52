from polyclick.polyspectra.analytic import (ModelSpectra, emitter_spectra, model_spectra, resolvent, s1, s2, s3, s4,
                                            s4_correction_terms, s4_correction_terms_by_quadrature)
from polyclick.polyspectra.grid import FrequencyGrid

__all__ = ["FrequencyGrid", "ModelSpectra", "emitter_spectra", "model_spectra", "resolvent", "s1", "s2", "s3", "s4",
           "s4_correction_terms", "s4_correction_terms_by_quadrature"]
