import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np

from polyclick import cli_shared, config, errors, plot_export, spectra_file, utils
from polyclick.estimator.clicks import read_clicks, sidecar_path
from polyclick.estimator.core import SpectraSet, estimate_spectra
from polyclick.fitting.core import FitResult
from polyclick.model.model_file import load_model
from polyclick.polyspectra.analytic import ModelSpectra, emitter_spectra
from polyclick.polyspectra.analytic import model_spectra as system_spectra
from polyclick.polyspectra.grid import FrequencyGrid

logger = logging.getLogger("cli.spectra")


def setup_parser(subparsers: Any):
    sub = cli_shared.add_command_subparser(subparsers, "estimate", "Estimate S1..S4 with error bars from a click file")
    cli_shared.add_infile_arg(sub, "--clicks", "click")
    cli_shared.add_estimation_args(sub)
    cli_shared.add_orders_arg(sub)
    cli_shared.add_outfile_arg(sub, "spectra file")
    cli_shared.add_common_args(sub)
    sub.set_defaults(func=estimate)

    sub = cli_shared.add_command_subparser(subparsers, "model-spectra", "Evaluate the closed-form S1..S4 of the emitter model")
    cli_shared.add_emitter_args(sub)
    sub.add_argument("--model", type=Path, help="a model definition file (JSON); replaces the emitter rates, needs --grid-from or --max-freq")
    cli_shared.add_orders_arg(sub)
    sub.add_argument("--grid-from", type=Path, help="use the frequency grid of this spectra file")
    sub.add_argument("--n-points", type=int, default=config.get_default("n-points"), help="points of the default grid (default: %(default)s)")
    sub.add_argument("--max-freq", type=float, default=config.get_default("max-freq"), help="span of the default grid, kHz (default: 20 x (gamma_in + gamma_out))")
    sub.add_argument("--white-noise", action="store_true", default=config.get_default("white-noise"), help="add the beta^2/4 shot floor to S2")
    cli_shared.add_outfile_arg(sub, "model spectra file")
    cli_shared.add_common_args(sub, with_seed=False)
    sub.set_defaults(func=model_spectra)

    sub = cli_shared.add_command_subparser(subparsers, "plot-export", "Write S2 and the S3/S4 cuts as CSV tables, measured next to model")
    cli_shared.add_infile_arg(sub, "--spectra", "estimated spectra")
    sub.add_argument("--model", type=Path, help="a model spectra file on the same grid")
    sub.add_argument("--fit", type=Path, help="a fit file; the model is evaluated at the fitted rates")
    sub.add_argument("--out-folder", type=Path, required=True, help="folder for the CSV tables")
    sub.add_argument("--subtract-background", action="store_true", default=config.get_default("subtract-background"), help="subtract the outer-ring median (display only)")
    cli_shared.add_common_args(sub, with_seed=False)
    sub.set_defaults(func=export_tables)


def _alpha_of(clicks_path: Path) -> Optional[float]:
    sidecar = sidecar_path(clicks_path)
    if not sidecar.is_file():
        return None
    alpha = utils.read_json_file(sidecar).get("alpha")
    return float(alpha) if alpha is not None else None


def estimate(args: Any):
    clicks = read_clicks(args.clicks)
    estimation_config = cli_shared.estimation_config_from_args(args)
    spectra = estimate_spectra(clicks, estimation_config, _alpha_of(args.clicks))
    spectra.save(args.out, args.force, cli_shared.command_echo(args))

    rows = [["clicks", len(clicks)], ["frames", spectra.metadata["frames"]]]
    if spectra.s1 is not None:
        rows.append(["S1 (kHz)", f"{spectra.s1:.6g} +- {spectra.s1_sigma:.2g}"])
    if spectra.s2 is not None:
        rows.append(["median sigma S2", f"{np.median(spectra.s2_sigma):.4g}"])
    cli_shared.print_table(["Quantity", "Value"], rows)


def _grid_for(args: Any) -> FrequencyGrid:
    if args.grid_from:
        return FrequencyGrid.from_dictionary(spectra_file.read(args.grid_from)["grid"])
    if args.max_freq:
        return FrequencyGrid.symmetric_span(args.max_freq, args.n_points)
    if args.model:
        raise errors.BadUsage("a model file carries no rates for the default grid, pass --grid-from or --max-freq")
    return FrequencyGrid.default_for(args.gamma_in, args.gamma_out, args.n_points)


def model_spectra(args: Any):
    grid = _grid_for(args)
    orders = tuple(args.orders)
    if args.model:
        sys = load_model(args.model)
        spectra = system_spectra(sys, grid, orders, include_white_noise=args.white_noise, params={"model_file": str(args.model)})
    else:
        params = cli_shared.emitter_params_from_args(args)
        params.warn_if_slow_detector()
        spectra = emitter_spectra(params, grid, orders, include_white_noise=args.white_noise)
    spectra.save(args.out, cli_shared.command_echo(args), args.force)


def export_tables(args: Any):
    measured = SpectraSet.load(args.spectra)
    model: Optional[ModelSpectra] = None
    if args.model:
        model = ModelSpectra.load(args.model)
    elif args.fit:
        result = FitResult.load(args.fit)
        model = emitter_spectra(result.params(), measured.grid, measured.orders, include_white_noise=False)

    for path in plot_export.export(measured, model, args.out_folder, args.subtract_background, args.force):
        print(path)
