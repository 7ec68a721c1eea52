import logging
from typing import Any

from polyclick import cli_shared
from polyclick.estimator.clicks import read_clicks
from polyclick.estimator.core import SpectraSet
from polyclick.fitting.core import FitResult, fit, subset_errors

logger = logging.getLogger("cli.fit")


def setup_parser(subparsers: Any):
    sub = cli_shared.add_command_subparser(subparsers, "fit", "Fit gamma_in, gamma_out and beta^2 to estimated spectra")
    cli_shared.add_infile_arg(sub, "--spectra", "estimated spectra")
    cli_shared.add_infile_arg(sub, "--clicks", "click (for the photon rate)")
    cli_shared.add_fit_args(sub)
    cli_shared.add_orders_arg(sub)
    cli_shared.add_outfile_arg(sub, "fit file")
    cli_shared.add_common_args(sub, with_threads=True)
    sub.set_defaults(func=fit_spectra)

    sub = cli_shared.add_command_subparser(subparsers, "subset-errors", "Thin, estimate and fit several subsets; report mean and spread of the rates")
    cli_shared.add_infile_arg(sub, "--clicks", "click")
    sub.add_argument("--alpha", type=float, required=True, help="photon fraction of every subset, below 1")
    cli_shared.add_fit_args(sub)
    cli_shared.add_estimation_args(sub)
    cli_shared.add_orders_arg(sub)
    cli_shared.add_outfile_arg(sub, "fit file")
    cli_shared.add_common_args(sub, with_threads=True)
    sub.set_defaults(func=fit_subsets)


def _print_summary(result: FitResult):
    def with_sigma(value: float, sigma: Any) -> str:
        return f"{value:.6g} +- {sigma:.2g}" if sigma is not None else f"{value:.6g}"

    cli_shared.print_table(["Parameter", "Value"], [
        ["gamma_in (kHz)", with_sigma(result.gamma_in, result.gamma_in_sigma)],
        ["gamma_out (kHz)", with_sigma(result.gamma_out, result.gamma_out_sigma)],
        ["beta_sq (kHz)", with_sigma(result.beta_sq, result.beta_sq_sigma)],
        ["gamma_ph derived (kHz)", f"{result.gamma_ph_derived:.6g}"],
        ["gamma_det fixed (kHz)", f"{result.gamma_det:.6g}"],
        ["objective", f"{result.objective:.6g}"],
        ["converged", result.converged]
    ])

    if result.subsets:
        cli_shared.print_table(
            ["Subset", "gamma_in", "gamma_out", "beta_sq", "objective"],
            [[row["subset"], f"{row['gamma_in']:.5g}", f"{row['gamma_out']:.5g}", f"{row['beta_sq']:.5g}", f"{row['objective']:.5g}"] for row in result.subsets]
        )


def fit_spectra(args: Any):
    measured = SpectraSet.load(args.spectra)
    clicks = read_clicks(args.clicks)
    result = fit(measured, clicks, cli_shared.fit_config_from_args(args))
    result.save(args.out, {"seed": args.seed}, args.force, cli_shared.command_echo(args))
    _print_summary(result)


def fit_subsets(args: Any):
    clicks = read_clicks(args.clicks)
    fit_config = cli_shared.fit_config_from_args(args)
    estimation_config = cli_shared.estimation_config_from_args(args)
    result = subset_errors(clicks, args.alpha, fit_config, estimation_config)
    seeds = {"seed": args.seed, "subset_seeds": [row["seed"] for row in result.subsets]}
    result.save(args.out, seeds, args.force, cli_shared.command_echo(args))
    _print_summary(result)
