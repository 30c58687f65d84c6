"""Drug-release modelling: classical fits, physics-informed networks, uncertainty bands."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import (
    ReleaseFlowError,
    __version__,
    run_comparison_json as _run_comparison_json,
    run_limited_data_json as _run_limited_data_json,
)


def run_comparison(curves, config, jobs=1):
    """Classical models and a PINN on each curve; returns the report as a dict."""
    return _json.loads(_run_comparison_json(curves, config, jobs))


def run_limited_data(curves, config, ns=(), threshold=0.05, jobs=1):
    """Held-out RMSE against training-set size; returns the report as a dict."""
    return _json.loads(_run_limited_data_json(curves, config, list(ns), threshold, jobs))
