import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple

from polyclick import errors, utils

logger = logging.getLogger("config")

CONFIG_FLAG = "--config"


def get_defaults() -> Dict[str, Any]:
    """Every option a config file may set, with its default."""
    return {
        # inputs
        "clicks": None,
        "spectra": None,
        "model": None,
        "fit": None,
        # emitter, kHz
        "gamma-in": 0.27,
        "gamma-out": 0.8,
        "gamma-ph": 298.0,
        "gamma-det": 5000.0,
        "beta-sq": 25000.0,
        # simulation
        "duration": 360.0,
        "exact": False,
        "occupation-out": None,
        # thinning
        "alpha": 1.0,
        # estimation
        "frame-length": 0.06,
        "n-freq": 65,
        "max-freq": None,
        "window": "confined_gaussian",
        "window-sigma": 0.14,
        "orders": [1, 2, 3, 4],
        "resampling-count": 100,
        "batch-count": 10,
        "naive-weights": False,
        "realization-chunk": 25,
        # model spectra
        "grid-from": None,
        "n-points": 64,
        "white-noise": False,
        # fitting
        "gamma-det-fixed": 1e5,
        "max-evaluations": 2000,
        "tolerance": 1e-5,
        "multistart": 3,
        "initial": None,
        "n-subsets": 10,
        # plot export
        "subtract-background": False,
        # shared
        "seed": 0,
        "threads": 1,
        "force": False,
        "verbose": False
    }


def get_default(name: str) -> Any:
    _guard_valid_name(name)
    return get_defaults()[name]


def _normalize(name: str) -> str:
    return name.strip().replace("_", "-")


def _guard_valid_name(name: str):
    if name not in get_defaults().keys():
        raise errors.UnknownConfigurationError(name)


def _read_config_data(path: Path) -> Dict[str, Any]:
    if path.suffix != ".json":
        return utils.read_toml_file(path)
    # an output file or click sidecar: rerun from its config echo
    data = utils.read_json_file(path)
    echo = data.get("config")
    if not isinstance(echo, dict):
        raise errors.ConfigurationError(f"[{path}] carries no config echo")
    return echo


def load_config_file(path: Path) -> Dict[str, Any]:
    """
    A flat key = value TOML file; keys are long option names, dashes or underscores.
    A JSON output file (or click sidecar) is read through its "config" echo.
    """
    data = _read_config_data(path)
    config_args: Dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            raise errors.ConfigurationError(f"[{key}] is a table, config files are flat")
        name = _normalize(key)
        _guard_valid_name(name)
        config_args[name] = value
    return config_args


def split_config_flag(argv: List[str]) -> Tuple[List[str], Optional[Path]]:
    """Finds --config <file> (or --config=<file>) and returns the remaining arguments and the path."""
    remaining: List[str] = []
    path: Optional[Path] = None
    index = 0
    while index < len(argv):
        arg = argv[index]
        if arg == CONFIG_FLAG:
            if index + 1 >= len(argv):
                raise errors.BadUsage(f"{CONFIG_FLAG} needs a file")
            path = Path(argv[index + 1]).expanduser()
            index += 2
            continue
        if arg.startswith(f"{CONFIG_FLAG}="):
            path = Path(arg[len(CONFIG_FLAG) + 1:]).expanduser()
        else:
            remaining.append(arg)
        index += 1
    return remaining, path


def add_config_args(argv: List[str], accepted: Optional[Set[str]] = None) -> List[str]:
    """Merges a --config file into argv; with `accepted`, entries the command has no option for are skipped."""
    argv, path = split_config_flag(argv)
    if path is None:
        return argv

    config_args = load_config_file(path)
    if accepted is not None:
        config_args = {key: value for key, value in config_args.items() if f"--{key}" in accepted or key == "verbose"}
    final_args = determine_final_args(argv, config_args)
    logger.info(f"Read {len(config_args)} entries from [{path}]. Final arguments: {final_args}")
    return final_args


def determine_final_args(argv: List[str], config_args: Dict[str, Any]) -> List[str]:
    extra_args = []
    for key, value in config_args.items():
        key_arg = f'--{key}'
        # arguments from the command line override the config
        if key_arg in argv:
            continue
        if any(arg.startswith(f"{key_arg}=") for arg in argv):
            continue
        if value is False or value is None:
            continue
        extra_args.append(key_arg)
        if value is True:
            continue
        if isinstance(value, List):
            for item in value:
                extra_args.append(str(item))
        else:
            extra_args.append(str(value))

    # the verbose flag goes before the command: polyclick --verbose estimate ...
    verbose_flag = '--verbose'
    pre_args = []
    if verbose_flag in extra_args:
        extra_args.remove(verbose_flag)
        pre_args = [verbose_flag]

    return pre_args + argv + extra_args
