"""OTOC quasiprobabilities, weak-measurement inference and Brownian ensembles."""

import json

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, NumericError, __version__, _run_experiment_json


def run_experiment(experiment, **options):
    """Run a catalog experiment.

    Options use the command-line names with underscores, e.g. ``t_max=4``.
    Returns a dict with ``metadata``, ``summary`` and ``columns`` (name to list).
    """
    config = {"experiment": experiment}
    config.update({k.replace("_", "-"): v for k, v in options.items()})
    out = json.loads(_run_experiment_json(json.dumps(config)))
    out["columns"] = {c["name"]: c["values"] if "values" in c else c["text"] for c in out["columns"]}
    return out
