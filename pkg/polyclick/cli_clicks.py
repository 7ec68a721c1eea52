import logging
from pathlib import Path
from typing import Any

from polyclick import cli_shared, config, utils
from polyclick.estimator.clicks import RNG_ALGORITHM, read_clicks, sidecar_path, thin, write_clicks
from polyclick.simulator.core import simulate_record, simulation_metadata, write_occupation

logger = logging.getLogger("cli.clicks")


def setup_parser(subparsers: Any):
    sub = cli_shared.add_command_subparser(subparsers, "simulate", "Simulate a click record of a blinking emitter")
    cli_shared.add_emitter_args(sub)
    sub.add_argument("--duration", type=float, default=config.get_default("duration"), help="record length in seconds (default: %(default)s)")
    sub.add_argument("--exact", action="store_true", default=config.get_default("exact"), help="run the four-state jump process, detector dead time included (slow)")
    sub.add_argument("--occupation-out", help="also write the bright/dark path as two-column text")
    cli_shared.add_outfile_arg(sub, "click file (.bin for binary)")
    cli_shared.add_common_args(sub)
    sub.set_defaults(func=simulate)

    sub = cli_shared.add_command_subparser(subparsers, "thin", "Keep each click independently with probability alpha")
    cli_shared.add_infile_arg(sub, "--clicks", "click")
    sub.add_argument("--alpha", type=float, required=True, help="the photon fraction to keep, in (0, 1]")
    cli_shared.add_outfile_arg(sub, "thinned click file")
    cli_shared.add_common_args(sub)
    sub.set_defaults(func=thin_clicks)


def simulate(args: Any):
    params = cli_shared.emitter_params_from_args(args)
    clicks, occupation = simulate_record(params, args.duration, args.seed, exact=args.exact)

    metadata = simulation_metadata(params, args.duration, args.seed, args.exact)
    metadata["config"] = cli_shared.command_echo(args)
    write_clicks(args.out, clicks, metadata, args.force)

    if args.occupation_out:
        if occupation is None:
            logger.warning("The four-state simulation does not produce an occupation path; --occupation-out ignored.")
        else:
            write_occupation(Path(args.occupation_out), occupation, args.force)


def thin_clicks(args: Any):
    clicks = read_clicks(args.clicks)
    thinned = thin(clicks, args.alpha, args.seed)

    source = sidecar_path(args.clicks)
    metadata = utils.read_json_file(source) if source.is_file() else {}
    metadata.update({
        "alpha": args.alpha * float(metadata.get("alpha", 1.0)),
        "thinning_seed": args.seed,
        "source": str(args.clicks),
        "rng": RNG_ALGORITHM,
        "config": cli_shared.command_echo(args)
    })
    write_clicks(args.out, thinned, metadata, args.force)
    logger.info(f"Kept {len(thinned)} of {len(clicks)} clicks.")
