"""
Envelope shared by every structured output file: format version, tool version,
kind, config echo and seeds around a kind-specific payload.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import semver

from polyclick import errors, guards, utils
from polyclick._version import __version__

logger = logging.getLogger("spectra_file")

FORMAT_VERSION = "1.0.0"


def check_format_version(path: Path, data: Dict[str, Any]):
    found = data.get("format_version")
    if not isinstance(found, str):
        raise errors.BadFile(str(path), "missing format_version")
    try:
        found_version = semver.VersionInfo.parse(found)
    except ValueError:
        raise errors.BadFile(str(path), f"unparsable format_version {found}") from None

    supported = semver.VersionInfo.parse(FORMAT_VERSION)
    if found_version.major != supported.major:
        raise errors.FormatVersionError(str(path), found, FORMAT_VERSION)


def wrap(kind: str, payload: Dict[str, Any], config: Optional[Dict[str, Any]] = None, seeds: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "kind": kind,
        "config": config or {},
        "seeds": seeds or {},
        **payload
    }


def write(path: Path, data: Dict[str, Any], force: bool = False):
    guards.can_write(path, force)
    utils.write_json_file(path, data)
    logger.info(f"Wrote {data.get('kind', 'output')} to [{path}].")


def read(path: Path, expected_kind: Optional[str] = None) -> Dict[str, Any]:
    guards.is_file(path)
    data = utils.read_json_file(path)
    check_format_version(path, data)
    if expected_kind and data.get("kind") != expected_kind:
        raise errors.BadFile(str(path), f"expected a [{expected_kind}] file, found [{data.get('kind')}]")
    return data
