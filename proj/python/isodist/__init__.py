"""Distributed monotone regression estimators (pooled, global, BDSE)."""

import json

from ._isodist import (
    DomainError,
    GlobalFit,
    PooledFit,
    bdse,
    default_bin_count,
    global_fit,
    pava_antitonic,
    pooled_fit,
    sample_chernoff,
)
from . import _isodist


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def generate(model, n, seed):
    """Returns (x, y, pop); model is a dict or a JSON string, pop is 1-based."""
    return _isodist.generate(_text(model), n, seed)


def validate_assumptions(model, n, k=0):
    return json.loads(_isodist.validate_assumptions(_text(model), n, k))


def mc_risk(config):
    return json.loads(_isodist.mc_risk(_text(config)))


__version__ = getattr(_isodist, "__version__", "0.0.0")
