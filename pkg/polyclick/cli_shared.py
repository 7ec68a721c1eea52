import argparse
from pathlib import Path
from typing import Any, Dict, List, Text

from prettytable import PrettyTable

from polyclick import config
from polyclick.estimator.core import EstimationConfig
from polyclick.fitting.core import FitConfig
from polyclick.model.emitter import EmitterParams

# outputs and run switches; everything else is echoed into the output files
ECHO_SKIPPED = {"func", "config", "out", "out_folder", "occupation_out", "force", "verbose"}


def wider_help_formatter(prog: Text):
    return argparse.HelpFormatter(prog, max_help_position=50, width=120)


def add_command_subparser(subparsers: Any, command: str, description: str):
    return subparsers.add_parser(
        command,
        usage=f"polyclick {command} [-h] ...",
        description=description,
        formatter_class=wider_help_formatter
    )


def build_epilog(subparsers: Any) -> str:
    epilog = """
----------------
COMMANDS summary
----------------
"""
    for choice, sub in subparsers.choices.items():
        epilog += f"{choice.ljust(30)} {sub.description}\n"

    return epilog


def _default(name: str) -> Any:
    return config.get_default(name)


def add_common_args(sub: Any, with_seed: bool = True, with_threads: bool = False):
    sub.add_argument("--config", type=Path, help="option defaults from a flat key = value TOML file, or from the config echo of a JSON output; command-line flags win")
    sub.add_argument("--force", action="store_true", default=_default("force"), help="overwrite existing outputs (default: %(default)s)")
    if with_seed:
        sub.add_argument("--seed", type=int, default=_default("seed"), help="the random seed (default: %(default)s)")
    if with_threads:
        sub.add_argument("--threads", type=int, default=_default("threads"), help="worker cap for parallel fits (default: %(default)s)")


def add_outfile_arg(sub: Any, what: str = ""):
    sub.add_argument("--out", type=Path, required=True, help=f"where to write the {what}")


def add_infile_arg(sub: Any, name: str = "--in", what: str = ""):
    sub.add_argument(name, type=Path, required=True, dest=name.lstrip("-").replace("-", "_"), help=f"the {what} file")


def add_emitter_args(sub: Any, with_gamma_ph: bool = True):
    sub.add_argument("--gamma-in", type=float, default=_default("gamma-in"), help="bright -> dark rate, kHz (default: %(default)s)")
    sub.add_argument("--gamma-out", type=float, default=_default("gamma-out"), help="dark -> bright rate, kHz (default: %(default)s)")
    if with_gamma_ph:
        sub.add_argument("--gamma-ph", type=float, default=_default("gamma-ph"), help="photon emission rate while bright, kHz (default: %(default)s)")
    sub.add_argument("--gamma-det", type=float, default=_default("gamma-det"), help="detector reset rate, kHz (default: %(default)s)")
    sub.add_argument("--beta-sq", type=float, default=_default("beta-sq"), help="measurement strength, kHz (default: %(default)s)")


def add_orders_arg(sub: Any):
    sub.add_argument("--orders", type=int, nargs="+", default=_default("orders"), choices=[1, 2, 3, 4], help="spectral orders (default: %(default)s)")


def add_estimation_args(sub: Any):
    sub.add_argument("--frame-length", type=float, default=_default("frame-length"), help="frame length T in seconds (default: %(default)s)")
    sub.add_argument("--n-freq", type=int, default=_default("n-freq"), help="odd number of grid points per axis (default: %(default)s)")
    sub.add_argument("--max-freq", type=float, default=_default("max-freq"), help="highest angular frequency, kHz; sets T when --frame-length is 0")
    sub.add_argument("--window", default=_default("window"), choices=["confined_gaussian", "rectangular"], help="window function (default: %(default)s)")
    sub.add_argument("--window-sigma", type=float, default=_default("window-sigma"), help="confined Gaussian width as a fraction of T (default: %(default)s)")
    sub.add_argument("--resampling-count", type=int, default=_default("resampling-count"), help="exponential-weight realizations (default: %(default)s)")
    sub.add_argument("--batch-count", type=int, default=_default("batch-count"), help="batches for the error estimate (default: %(default)s)")
    sub.add_argument("--realization-chunk", type=int, default=_default("realization-chunk"), help="realizations evaluated together (default: %(default)s)")
    sub.add_argument("--naive-weights", action="store_true", default=_default("naive-weights"), help="use unit click weights instead of exponential ones")


def add_fit_args(sub: Any):
    sub.add_argument("--gamma-det-fixed", type=float, default=_default("gamma-det-fixed"), help="detector rate held fixed in the model, kHz (default: %(default)s)")
    sub.add_argument("--max-evaluations", type=int, default=_default("max-evaluations"), help="objective evaluations per start (default: %(default)s)")
    sub.add_argument("--tolerance", type=float, default=_default("tolerance"), help="simplex tolerance in log space (default: %(default)s)")
    sub.add_argument("--multistart", type=int, default=_default("multistart"), help="starts per rate axis (default: %(default)s)")
    sub.add_argument("--initial", type=float, nargs=3, default=_default("initial"), metavar=("GAMMA_IN", "GAMMA_OUT", "BETA_SQ"), help="single starting point instead of the grid")
    sub.add_argument("--n-subsets", type=int, default=_default("n-subsets"), help="thinned subsets for error bars (default: %(default)s)")


def emitter_params_from_args(args: Any) -> EmitterParams:
    return EmitterParams(args.gamma_in, args.gamma_out, args.gamma_ph, args.gamma_det, args.beta_sq)


def estimation_config_from_args(args: Any) -> EstimationConfig:
    return EstimationConfig(
        frame_length=args.frame_length if args.frame_length else None,
        n_freq=args.n_freq,
        max_freq=args.max_freq,
        window=args.window,
        window_sigma=args.window_sigma,
        orders=tuple(args.orders),
        resampling_count=args.resampling_count,
        batch_count=args.batch_count,
        seed=args.seed,
        exponential_weights=not args.naive_weights,
        realization_chunk=args.realization_chunk
    )


def fit_config_from_args(args: Any) -> FitConfig:
    return FitConfig(
        orders=tuple(args.orders),
        gamma_det_fixed=args.gamma_det_fixed,
        max_evaluations=args.max_evaluations,
        tolerance=args.tolerance,
        multistart=args.multistart,
        initial=tuple(args.initial) if args.initial else None,
        n_subsets=args.n_subsets,
        seed=args.seed,
        threads=args.threads
    )


def command_echo(args: Any) -> Dict[str, Any]:
    """The options of this run under their long names, inputs included; `--config <output>` takes them back."""
    echo: Dict[str, Any] = {}
    for name, value in vars(args).items():
        if name in ECHO_SKIPPED:
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        echo[name.replace("_", "-")] = value
    return echo


def print_table(header: List[str], rows: List[List[Any]]):
    table = PrettyTable(header)
    for row in rows:
        table.add_row(row)
    print(table)
