import argparse
import logging
import sys
from argparse import ArgumentParser
from typing import List, Set

import polyclick.cli_clicks
import polyclick.cli_fit
import polyclick.cli_spectra
from polyclick import cli_shared, config, errors
from polyclick._version import __version__

logger = logging.getLogger("cli")


def main(cli_args: List[str] = sys.argv[1:]):
    try:
        _do_main(cli_args)
    except errors.KnownError as err:
        logger.critical(err.get_pretty())
        return err.exit_code
    except KeyboardInterrupt:
        print("polyclick process killed by user.")
        return 1
    return 0


def _do_main(cli_args: List[str]):
    logging.basicConfig(level=logging.INFO)

    parser = setup_parser()
    argv_with_config_args = config.add_config_args(cli_args, _accepted_options(parser, cli_args))
    args = parser.parse_args(argv_with_config_args)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    else:
        logging.getLogger().setLevel(logging.WARN)

    if not hasattr(args, "func"):
        parser.print_help()
    else:
        args.func(args)


def _accepted_options(parser: ArgumentParser, cli_args: List[str]) -> Set[str]:
    """Long options of the chosen command, so that a shared config file may hold entries for other commands."""
    commands = parser._subparsers._group_actions[0].choices  # type: ignore
    command = next((arg for arg in cli_args if arg in commands), None)
    if command is None:
        return set()
    return {option for action in commands[command]._actions for option in action.option_strings if option.startswith("--")}


def setup_parser():
    parser = ArgumentParser(
        prog="polyclick",
        usage="polyclick [-h] [-v] [--verbose] COMMAND [-h] ...",
        description="""
-----------
DESCRIPTION
-----------
polyclick simulates, estimates and fits the polyspectra (S1 to S4) of blinking
single-photon emitters, working directly on photon click timestamps.

Files use seconds and kHz (angular) throughout.
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter
    )

    parser._positionals.title = "COMMANDS"
    parser._optionals.title = "TOP-LEVEL OPTIONS"

    parser.add_argument("-v", "--version", action="version", version=f"polyclick {__version__}")
    parser.add_argument("--verbose", action="store_true", default=False)

    subparsers = parser.add_subparsers()
    polyclick.cli_clicks.setup_parser(subparsers)
    polyclick.cli_spectra.setup_parser(subparsers)
    polyclick.cli_fit.setup_parser(subparsers)

    parser.epilog = cli_shared.build_epilog(subparsers)
    return parser


if __name__ == "__main__":
    ret = main()
    sys.exit(ret)
