"""Randomized-saturation IV estimation of spillover effects.

Configurations are dicts (or paths to JSON files) with the same blocks the
``sativ`` command line tool reads: ``design``, ``basis``, ``sim``,
``estimation`` and ``mc``. Data is any mapping with the columns
``group_id``, ``saturation``, ``z``, ``d`` and ``y`` (a dict of arrays or a
pandas DataFrame).
"""

import json
from os import PathLike

import numpy as np

from . import _core
from ._core import NumericalError, ValidationError

__all__ = [
    "NumericalError",
    "ValidationError",
    "effect_curve",
    "estimate",
    "ior_test",
    "montecarlo",
    "q_exact",
    "simulate",
    "validate_design",
]

_COLUMNS = ("group_id", "saturation", "z", "d", "y")


def _config(config):
    if isinstance(config, (str, PathLike)):
        with open(config, encoding="utf-8") as fh:
            return fh.read()
    return json.dumps(config)


def _columns(data):
    missing = [c for c in _COLUMNS if c not in data]
    if missing:
        raise ValidationError("data is missing columns: " + ", ".join(missing))
    return (
        np.asarray(data["group_id"], dtype=np.int64),
        np.asarray(data["saturation"], dtype=np.float64),
        np.asarray(data["z"], dtype=np.int32),
        np.asarray(data["d"], dtype=np.int32),
        np.asarray(data["y"], dtype=np.float64),
    )


def simulate(config, seed=None):
    """Draw one experiment; returns a dict of column arrays (plus ``complier``)."""
    return _core.simulate(_config(config), seed)


def estimate(config, data, target="joint", pure_control="", small_sample=False):
    """Estimate one target: joint, complier-psi, never-taker, population,
    complier-theta or naive."""
    out = _core.estimate(_config(config), *_columns(data), target, pure_control, small_sample)
    result = json.loads(out)
    result["coefficients"] = np.asarray(result["coefficients"])
    result["se"] = np.asarray(result["se"])
    result["vcov"] = np.asarray(result["vcov"])
    return result


def effect_curve(config, data, kind, grid_points=101, delta=0.1, pure_control=""):
    """Effect curve over the neighbour take-up share, e.g. kind="DE_treated"."""
    return _core.effect_curve(_config(config), *_columns(data), kind, grid_points, delta, pure_control)


def ior_test(data):
    """Test that take-up among offered individuals does not vary with saturation."""
    return json.loads(_core.ior_test(*_columns(data)))


def validate_design(config, n=(11, 21, 101), cbar_points=11, threshold=1e-10):
    return json.loads(_core.validate_design(_config(config), list(n), cbar_points, threshold))


def montecarlo(config, reps=None, jobs=None, oracle_draws=None):
    return json.loads(_core.montecarlo(_config(config), reps, jobs, oracle_draws))


def q_exact(config, cbar, n, condition_on_positive=False):
    """Returns (Q0, Q1, Q) for the configured design and basis."""
    return _core.q_exact(_config(config), cbar, n, condition_on_positive)
