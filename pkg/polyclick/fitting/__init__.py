from polyclick.fitting.core import (FitConfig, FitResult, fit, fit_with_rate, gamma_ph_from_counts, moment_seed,
                                    objective, subset_errors)

__all__ = ["FitConfig", "FitResult", "fit", "fit_with_rate", "gamma_ph_from_counts", "moment_seed", "objective",
           "subset_errors"]
