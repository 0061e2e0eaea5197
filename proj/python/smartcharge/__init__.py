"""EV charging facility scheduling and simulation."""

import json

from ._core import SmartChargeError, strategies
from ._core import calibrate_csv as _calibrate_csv
from ._core import compare_json as _compare_json
from ._core import default_model_json as _default_model_json
from ._core import generate_trace_csv
from ._core import simulate_json as _simulate_json

__all__ = [
    "SmartChargeError",
    "calibrate",
    "compare",
    "default_model",
    "generate_trace_csv",
    "simulate",
    "strategies",
]


def default_model():
    """Built-in daily arrival model as a dict."""
    return json.loads(_default_model_json())


def calibrate(csv_text, num_evse=57):
    """Daily arrival model fitted to a session trace given as CSV text."""
    return json.loads(_calibrate_csv(csv_text, num_evse))


def simulate(config_path, strategy, capacity_kw=None, sigma_slots=None, seed=None, days=None):
    """Runs one strategy and returns its metrics and per-slot facility load."""
    return json.loads(_simulate_json(str(config_path), strategy, capacity_kw, sigma_slots, seed, days))


def compare(config_path, out_dir, jobs=1, days=None):
    """Runs every cell of a configuration, writing exports under out_dir."""
    return json.loads(_compare_json(str(config_path), str(out_dir), jobs, days))
