"""Beam-hardening CT laboratory: simulation, streak prediction and
identification of the polynomial nonlinearity."""

import json

from ._core import (  # noqa: F401
    ConfigError,
    ConvexBody,
    Error,
    GaussianBump,
    GeometryError,
    ImageGrid,
    Physical,
    Polynomial,
    Scene,
    SinogramGrid,
    Zero,
    add_noise,
    crossing_count,
    eval_nonlinearity,
    fbp,
    multinomial,
    predict_streaks,
    selftest,
    synthesize,
    taylor_of_physical,
)
from . import _core


def identify(p, scene, method="regression", j_max=3):
    """Identification report as a dict; coefficients are keyed by degree."""
    return json.loads(_core._identify_json(p, scene, method, j_max))


def normalize_config(config):
    """Parse and re-serialize a configuration dict (validates it)."""
    return json.loads(_core._config_roundtrip(json.dumps(config)))


__all__ = [name for name in dir() if not name.startswith("_")]
