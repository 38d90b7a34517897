"""Loading of the shipped physical defaults."""

import json
import os
from functools import lru_cache
from importlib import resources
from pathlib import Path

ENV_VAR = "FPCAVITY_DEFAULTS"


@lru_cache(maxsize=None)
def _load(path):
    if path is None:
        text = resources.files("fpcavity").joinpath("defaults.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def defaults():
    """Return the defaults dict, honouring the ``FPCAVITY_DEFAULTS`` override."""
    data = dict(_load(None))
    override = os.environ.get(ENV_VAR)
    if override:
        data.update(_load(override))
    return data
