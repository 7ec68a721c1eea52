"""
Simultaneous fit of the emitter's S1..S4 to estimated spectra.

Free parameters are (gamma_in, gamma_out, beta_sq), searched in log space
with Nelder-Mead from a grid of starts. gamma_det is held fixed and
gamma_ph follows from the click rate for the current (gamma_in, gamma_out).
"""

import concurrent.futures
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from polyclick import errors, guards, spectra_file
from polyclick.estimator.clicks import ClickRecord, thin
from polyclick.estimator.core import EstimationConfig, SpectraSet, estimate_spectra
from polyclick.model.emitter import EmitterParams
from polyclick.polyspectra.analytic import ModelSpectra, emitter_spectra

logger = logging.getLogger("fitting")

ALL_ORDERS = (1, 2, 3, 4)
PENALTY = 1e30
MAX_SUBSET_FAILURES = 2
BACKGROUND_RING = 0.2

Rates = Tuple[float, float, float]


@dataclass(frozen=True)
class FitConfig:
    orders: Tuple[int, ...] = ALL_ORDERS
    gamma_det_fixed: float = 1e5
    max_evaluations: int = 2000
    tolerance: float = 1e-5
    multistart: int = 3
    initial: Optional[Tuple[float, float, float]] = None
    n_subsets: int = 10
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(sorted(set(int(order) for order in self.orders))))
        if not set(self.orders) <= set(ALL_ORDERS) or 2 not in self.orders:
            raise errors.ConfigurationError(f"fit orders must be a subset of {ALL_ORDERS} containing 2, got {self.orders}")
        guards.is_positive("gamma_det_fixed", self.gamma_det_fixed)
        guards.is_positive("tolerance", self.tolerance)
        if self.max_evaluations < 1:
            raise errors.ConfigurationError("max_evaluations must be at least 1")
        if self.multistart < 1 or self.n_subsets < 1 or self.threads < 1:
            raise errors.ConfigurationError("multistart, n_subsets and threads must be at least 1")
        if self.initial is not None:
            initial = tuple(float(value) for value in self.initial)
            if len(initial) != 3:
                raise errors.ConfigurationError("initial takes three values: gamma_in, gamma_out, beta_sq")
            for name, value in zip(("gamma_in", "gamma_out", "beta_sq"), initial):
                guards.is_positive(name, value)
            object.__setattr__(self, "initial", initial)

    def to_dictionary(self) -> Dict[str, Any]:
        data = asdict(self)
        data["orders"] = list(self.orders)
        data["initial"] = list(self.initial) if self.initial is not None else None
        return data

    @classmethod
    def from_dictionary(cls, data: Dict[str, Any]) -> 'FitConfig':
        known = {name: value for name, value in data.items() if name in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise errors.UnknownConfigurationError(", ".join(sorted(unknown)))
        if "orders" in known:
            known["orders"] = tuple(known["orders"])
        if known.get("initial") is not None:
            known["initial"] = tuple(known["initial"])
        return cls(**known)

    def to_options(self) -> Dict[str, Any]:
        """The same settings under the command-line option names."""
        return {
            "orders": list(self.orders),
            "gamma-det-fixed": self.gamma_det_fixed,
            "max-evaluations": self.max_evaluations,
            "tolerance": self.tolerance,
            "multistart": self.multistart,
            "initial": list(self.initial) if self.initial is not None else None,
            "n-subsets": self.n_subsets,
            "seed": self.seed,
            "threads": self.threads
        }


@dataclass
class FitResult:
    gamma_in: float
    gamma_out: float
    beta_sq: float
    gamma_ph_derived: float
    gamma_det: float
    objective: float
    converged: bool
    evaluations: int = 0
    gamma_in_sigma: Optional[float] = None
    gamma_out_sigma: Optional[float] = None
    beta_sq_sigma: Optional[float] = None
    penalized_evaluations: int = 0
    starts: List[Dict[str, Any]] = field(default_factory=list)
    subsets: List[Dict[str, Any]] = field(default_factory=list)
    failed_subsets: List[Dict[str, Any]] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def params(self) -> EmitterParams:
        return EmitterParams(self.gamma_in, self.gamma_out, self.gamma_ph_derived, self.gamma_det, self.beta_sq)

    def intervals(self) -> Dict[str, Optional[List[float]]]:
        """Mean +- 3 sigma where a subset sigma exists."""
        result: Dict[str, Optional[List[float]]] = {}
        for name in ("gamma_in", "gamma_out", "beta_sq"):
            sigma = getattr(self, f"{name}_sigma")
            value = getattr(self, name)
            result[name] = [value - 3 * sigma, value + 3 * sigma] if sigma is not None else None
        return result

    def to_dictionary(self) -> Dict[str, Any]:
        data = asdict(self)
        data["intervals_3sigma"] = self.intervals()
        return data

    @classmethod
    def from_dictionary(cls, data: Dict[str, Any]) -> 'FitResult':
        known = {name: value for name, value in data.items() if name in cls.__dataclass_fields__}
        return cls(**known)

    def to_options(self) -> Dict[str, Any]:
        """Fit settings, and for subset fits the estimation settings and alpha, under the option names."""
        options: Dict[str, Any] = {}
        if "alpha" in self.config:
            options.update(EstimationConfig.from_dictionary(self.config["estimation"]).to_options())
            options["alpha"] = self.config["alpha"]
        if "fit" in self.config:
            options.update(FitConfig.from_dictionary(self.config["fit"]).to_options())
        return options

    def save(self, path: Path, seeds: Optional[Dict[str, Any]] = None, force: bool = False,
             echo: Optional[Dict[str, Any]] = None):
        echo = self.to_options() if echo is None else echo
        spectra_file.write(path, spectra_file.wrap("fit", self.to_dictionary(), echo, seeds), force)

    @classmethod
    def load(cls, path: Path) -> 'FitResult':
        return cls.from_dictionary(spectra_file.read(path, "fit"))


def gamma_ph_from_rate(click_rate: float, gamma_in: float, gamma_out: float) -> float:
    """gamma_ph = rate * (1/gamma_in + 1/gamma_out) / (1/gamma_in)."""
    guards.is_positive("gamma_in", gamma_in)
    guards.is_positive("gamma_out", gamma_out)
    return click_rate * (1 / gamma_in + 1 / gamma_out) / (1 / gamma_in)


def gamma_ph_from_counts(clicks: ClickRecord, gamma_in: float, gamma_out: float) -> float:
    if len(clicks) == 0:
        raise errors.BadInputError("clicks", "the record is empty, the photon rate cannot be derived")
    return gamma_ph_from_rate(clicks.rate_khz, gamma_in, gamma_out)


@dataclass(frozen=True)
class FitData:
    """Measured values and weights per order, flattened to real arrays; S3 as (real, imag)."""
    measured: SpectraSet
    orders: Tuple[int, ...]
    values: Dict[int, np.ndarray]
    weights: Dict[int, np.ndarray]
    excluded: int

    @property
    def points(self) -> int:
        return int(sum(np.count_nonzero(weights) for weights in self.weights.values()))


def prepare_data(measured: SpectraSet, orders: Sequence[int]) -> FitData:
    """Inverse-variance weights; points seen twice by symmetry count half; sigma = 0 points are dropped."""
    omegas = measured.grid.values
    scale = max(1.0, float(np.max(np.abs(omegas))))
    off_diagonal = ~np.isclose(omegas[:, None], omegas[None, :], rtol=0, atol=1e-12 * scale)
    nonzero = np.abs(omegas) > 1e-12 * scale

    values: Dict[int, np.ndarray] = {}
    sigmas: Dict[int, np.ndarray] = {}
    duplicates: Dict[int, np.ndarray] = {}
    for order in orders:
        if order not in measured.orders:
            raise errors.ConfigurationError(f"order {order} is requested for the fit but missing from the measured spectra")
        if order == 1:
            values[1] = np.array([measured.s1], dtype=float)
            sigmas[1] = np.array([measured.s1_sigma], dtype=float)
            duplicates[1] = np.ones(1)
        elif order == 2:
            values[2] = np.asarray(measured.s2, dtype=float)
            sigmas[2] = np.asarray(measured.s2_sigma, dtype=float)
            duplicates[2] = np.where(nonzero, 0.5, 1.0)
        elif order == 3:
            s3 = np.asarray(measured.s3)
            sigma = np.asarray(measured.s3_sigma)
            values[3] = np.stack((s3.real, s3.imag))
            sigmas[3] = np.stack((sigma.real, sigma.imag))
            duplicates[3] = np.broadcast_to(np.where(off_diagonal, 0.5, 1.0), values[3].shape)
        else:
            values[4] = np.asarray(measured.s4, dtype=float)
            sigmas[4] = np.asarray(measured.s4_sigma, dtype=float)
            duplicates[4] = np.where(off_diagonal, 0.5, 1.0)

    weights: Dict[int, np.ndarray] = {}
    excluded = 0
    for order in values:
        usable = (sigmas[order] > 0) & np.isfinite(sigmas[order]) & np.isfinite(values[order])
        excluded += int(np.count_nonzero(~usable))
        safe_sigma = np.where(usable, sigmas[order], 1.0)
        weights[order] = np.where(usable, duplicates[order] / safe_sigma ** 2, 0.0)
        values[order] = np.where(usable, values[order], 0.0)
    if excluded:
        logger.warning(f"{excluded} measured points have zero or undefined sigma and are left out of the fit.")

    return FitData(measured, tuple(values), values, weights, excluded)


def _model_arrays(model: ModelSpectra, order: int) -> np.ndarray:
    if order == 1:
        return np.array([model.s1], dtype=float)
    if order == 2:
        return np.asarray(model.s2, dtype=float)
    if order == 3:
        s3 = np.asarray(model.s3)
        return np.stack((s3.real, s3.imag))
    return np.asarray(model.s4, dtype=float)


class Objective:
    """Weighted squared residuals; counts evaluations and those that hit the penalty."""

    def __init__(self, data: FitData, config: FitConfig, click_rate: float):
        self.data = data
        self.config = config
        self.click_rate = click_rate
        self.evaluations = 0
        self.penalized = 0
        self.last_error: Optional[str] = None

    def params_for(self, rates: Rates) -> EmitterParams:
        gamma_in, gamma_out, beta_sq = rates
        gamma_ph = gamma_ph_from_rate(self.click_rate, gamma_in, gamma_out)
        return EmitterParams(gamma_in, gamma_out, gamma_ph, self.config.gamma_det_fixed, beta_sq)

    def evaluate(self, rates: Rates) -> float:
        self.evaluations += 1
        try:
            params = self.params_for(rates)
            model = emitter_spectra(params, self.data.measured.grid, self.data.orders, include_white_noise=False)
        except errors.KnownError as err:
            self.penalized += 1
            self.last_error = str(err)
            logger.debug(f"model evaluation failed at {rates}: {err}")
            return PENALTY

        total = 0.0
        for order in self.data.orders:
            residual = _model_arrays(model, order) - self.data.values[order]
            total += float(np.sum(self.data.weights[order] * residual ** 2))
        return total if np.isfinite(total) else PENALTY

    def __call__(self, log_rates: np.ndarray) -> float:
        return self.evaluate(tuple(float(value) for value in np.exp(log_rates)))  # type: ignore


def objective(rates: Rates, measured: SpectraSet, config: FitConfig, click_rate: float) -> float:
    return Objective(prepare_data(measured, config.orders), config, click_rate).evaluate(rates)


def moment_seed(measured: SpectraSet) -> Tuple[float, float]:
    """(gamma_in + gamma_out, background) from the half width of the S2 peak at zero frequency."""
    if measured.s2 is None:
        raise errors.ConfigurationError("the S2 estimate is needed for the starting point")
    omegas = measured.grid.values
    s2 = np.asarray(measured.s2, dtype=float)

    span = np.max(np.abs(omegas))
    outer = np.abs(omegas) >= (1 - BACKGROUND_RING) * span
    background = float(np.median(s2[outer]))

    positive = omegas >= 0
    ws, peak = omegas[positive], s2[positive] - background
    order = np.argsort(ws)
    ws, peak = ws[order], peak[order]
    half = peak[0] / 2
    below = np.flatnonzero(peak <= half)
    if peak[0] <= 0 or len(below) == 0 or below[0] == 0:
        switching = span / 4
        logger.warning(f"No clear S2 peak at zero frequency; starting from gamma_in + gamma_out = {switching:.4g} kHz.")
        return switching, background

    j = below[0]
    fraction = (peak[j - 1] - half) / (peak[j - 1] - peak[j])
    switching = float(ws[j - 1] + fraction * (ws[j] - ws[j - 1]))
    return switching, background


def starting_points(measured: SpectraSet, config: FitConfig) -> List[Rates]:
    if config.initial is not None:
        return [config.initial]  # type: ignore
    switching, _ = moment_seed(measured)
    factors = 10.0 ** np.linspace(-1, 1, config.multistart) if config.multistart > 1 else np.ones(1)
    beta_sq = config.gamma_det_fixed
    return [(switching / 2 * f_in, switching / 2 * f_out, beta_sq) for f_in in factors for f_out in factors]


def _run_start(data: FitData, config: FitConfig, click_rate: float, start: Rates) -> Dict[str, Any]:
    function = Objective(data, config, click_rate)
    outcome = scipy.optimize.minimize(
        function,
        np.log(np.asarray(start, dtype=float)),
        method="Nelder-Mead",
        options={"xatol": config.tolerance, "fatol": config.tolerance, "maxfev": config.max_evaluations}
    )
    rates = tuple(float(value) for value in np.exp(outcome.x))
    return {
        "start": list(start),
        "rates": list(rates),
        "objective": float(outcome.fun),
        "converged": bool(outcome.success),
        "evaluations": function.evaluations,
        "penalized": function.penalized,
        "message": str(outcome.message),
        "last_error": function.last_error
    }


def fit(measured: SpectraSet, clicks: ClickRecord, config: FitConfig) -> FitResult:
    if len(clicks) == 0:
        raise errors.BadInputError("clicks", "the record is empty, the photon rate cannot be derived")
    return fit_with_rate(measured, clicks.rate_khz, config)


def fit_with_rate(measured: SpectraSet, click_rate: float, config: FitConfig) -> FitResult:
    data = prepare_data(measured, config.orders)
    starts = starting_points(measured, config)
    logger.info(f"Fitting orders {data.orders} on {data.points} points from {len(starts)} starts.")

    with concurrent.futures.ThreadPoolExecutor(max_workers=config.threads) as executor:
        runs = list(executor.map(lambda start: _run_start(data, config, click_rate, start), starts))

    usable = [run for run in runs if run["objective"] < PENALTY]
    if not usable:
        raise errors.FitError("every start ended on a failed model evaluation", runs[-1]["last_error"])

    best = min(usable, key=lambda run: run["objective"])
    if not best["converged"]:
        logger.warning(f"Best start did not meet the tolerance within {config.max_evaluations} evaluations: {best['message']}")

    gamma_in, gamma_out, beta_sq = best["rates"]
    return FitResult(
        gamma_in=gamma_in,
        gamma_out=gamma_out,
        beta_sq=beta_sq,
        gamma_ph_derived=gamma_ph_from_rate(click_rate, gamma_in, gamma_out),
        gamma_det=config.gamma_det_fixed,
        objective=best["objective"],
        converged=best["converged"],
        evaluations=sum(run["evaluations"] for run in runs),
        penalized_evaluations=sum(run["penalized"] for run in runs),
        starts=runs,
        config={"fit": config.to_dictionary(), "click_rate_khz": click_rate, "spectra_config": measured.metadata.get("config", {})}
    )


def _subset_seeds(seed: int, count: int) -> List[int]:
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


def _fit_subset(clicks: ClickRecord, alpha: float, seed: int, fit_config: FitConfig,
                estimation_config: EstimationConfig) -> FitResult:
    subset = thin(clicks, alpha, seed)
    measured = estimate_spectra(subset, replace(estimation_config, seed=seed), alpha)
    return fit(measured, subset, replace(fit_config, threads=1))


def subset_errors(clicks: ClickRecord, alpha: float, fit_config: FitConfig, estimation_config: EstimationConfig) -> FitResult:
    """Thin, estimate and fit n_subsets times; report the mean and spread of the rates."""
    guards.is_fraction("alpha", alpha)
    if alpha >= 1:
        raise errors.BadInputError("alpha", "must be below 1 so that the subsets differ")

    seeds = _subset_seeds(fit_config.seed, fit_config.n_subsets)
    logger.info(f"Fitting {len(seeds)} subsets at alpha = {alpha}.")

    def work(seed: int):
        try:
            return _fit_subset(clicks, alpha, seed, fit_config, estimation_config)
        except errors.KnownError as err:
            return err

    with concurrent.futures.ThreadPoolExecutor(max_workers=fit_config.threads) as executor:
        outcomes = list(executor.map(work, seeds))

    subsets: List[Dict[str, Any]] = []
    failures: List[Dict[str, Any]] = []
    results: List[FitResult] = []
    for index, (seed, outcome) in enumerate(zip(seeds, outcomes)):
        if isinstance(outcome, errors.KnownError):
            failures.append({"subset": index, "seed": seed, "error": str(outcome)})
            continue
        results.append(outcome)
        subsets.append({
            "subset": index,
            "seed": seed,
            "gamma_in": outcome.gamma_in,
            "gamma_out": outcome.gamma_out,
            "beta_sq": outcome.beta_sq,
            "gamma_ph_derived": outcome.gamma_ph_derived,
            "objective": outcome.objective,
            "converged": outcome.converged
        })

    if len(failures) > MAX_SUBSET_FAILURES or not results:
        raise errors.FitError(f"{len(failures)} of {len(seeds)} subset fits failed", failures[-1]["error"] if failures else None)
    if failures:
        logger.warning(f"{len(failures)} subset fits failed and are left out of the statistics.")

    table = np.array([[result.gamma_in, result.gamma_out, result.beta_sq, result.gamma_ph_derived] for result in results])
    mean = table.mean(axis=0)
    sigma: List[Optional[float]] = [float(value) for value in table.std(axis=0, ddof=1)] if len(results) > 1 else [None] * 4

    return FitResult(
        gamma_in=float(mean[0]),
        gamma_out=float(mean[1]),
        beta_sq=float(mean[2]),
        gamma_ph_derived=float(mean[3]),
        gamma_det=fit_config.gamma_det_fixed,
        objective=float(np.mean([result.objective for result in results])),
        converged=all(result.converged for result in results),
        evaluations=sum(result.evaluations for result in results),
        gamma_in_sigma=sigma[0],
        gamma_out_sigma=sigma[1],
        beta_sq_sigma=sigma[2],
        penalized_evaluations=sum(result.penalized_evaluations for result in results),
        subsets=subsets,
        failed_subsets=failures,
        config={"fit": fit_config.to_dictionary(), "estimation": estimation_config.to_dictionary(), "alpha": alpha}
    )
