"""SFWM heralded-photon source design: phasematching, joint spectra, Schmidt analysis, counting."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import run_command as _run_command


def run(command, config=None, preset=None, seed=None, threads=1):
    """Run a command in-process. Returns (files, report) with files mapping name to text."""
    files, report = _run_command(command, _json.dumps(config or {}), preset, seed, threads)
    return files, _json.loads(report)
