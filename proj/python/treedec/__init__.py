"""Tree-search lattice decoding: sphere, stack and Fano decoders with
MMSE-DFE and LLL preprocessing, plus a Monte Carlo sweep runner."""

import json

from . import _treedec
from ._treedec import Error, exhaustive_ml, left_preprocess, lll_reduce

__all__ = [
    "Error",
    "compare",
    "decode",
    "exhaustive_ml",
    "export_instance",
    "left_preprocess",
    "lll_reduce",
    "simulate",
    "validate_config",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def simulate(config, workers=1, shadow_oracle=False):
    """Sweep report as a dict; `config` is a dict or a JSON string."""
    return json.loads(_treedec.simulate(_text(config), workers, shadow_oracle))


def compare(configs, workers=1):
    return json.loads(_treedec.compare([_text(c) for c in configs], workers))


def validate_config(config):
    return json.loads(_treedec.validate_config(_text(config)))


def export_instance(config, snr_db=None, frame=0):
    """Instance record (JSON string) for one frame of an experiment."""
    return _treedec.export_instance(_text(config), snr_db, frame)


def decode(instance, config=None, trace=False):
    """Decode an exported instance with the preprocessing and decoder of `config`."""
    return _treedec.decode(instance, None if config is None else _text(config), trace)
