"""Robust energy-efficient RIS-assisted hybrid beamforming.

Configurations are plain dicts in the JSON schema documented in the README.
Partial dicts are merged over the profile defaults; unknown keys raise
ValueError.
"""

import json

from . import _core
from ._core import (
    SCHEMA_VERSION,
    identity_checks,
    jain_index,
    project_C,
    project_D,
    project_a,
    project_theta,
)

__all__ = [
    "SCHEMA_VERSION",
    "default_config",
    "normalize_config",
    "config_hash",
    "run_trials",
    "sweep",
    "convergence",
    "gradient_suite",
    "bound_suite",
    "identity_checks",
    "jain_index",
    "project_D",
    "project_a",
    "project_theta",
    "project_C",
]


def _text(config):
    if config is None:
        return None
    return json.dumps(config)


def _checked(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except RuntimeError as exc:  # nlohmann and std::invalid_argument surface here
        raise ValueError(str(exc)) from exc


def default_config(profile="desk"):
    return json.loads(_core.default_config(profile))


def normalize_config(config):
    return json.loads(_checked(_core.normalize_config, json.dumps(config)))


def config_hash(config):
    return _checked(_core.config_hash, json.dumps(config))


def run_trials(config=None, perfect_csi=False):
    return _checked(_core.run_trials, _text(config), perfect_csi)


def sweep(config=None, axis="rho", grid=None):
    return _checked(_core.sweep, _text(config), axis, grid)


def convergence(config=None, starts=8):
    return _checked(_core.convergence, _text(config), starts)


def gradient_suite(instances=20, seed=1):
    return _core.gradient_suite(instances, seed)


def bound_suite(instances=10, samples=10000, seed=1):
    return _core.bound_suite(instances, samples, seed)
