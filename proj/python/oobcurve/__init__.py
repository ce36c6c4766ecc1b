# Copyright 2026 The oobcurve Authors.
# SPDX-License-Identifier: Apache-2.0
"""Out-of-bag performance curves of random forests."""

import json as _json

from . import _core
from ._core import *  # noqa: F401,F403


def run_study(config):
    """Runs a study. `config` is a dict or a JSON string."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _core.run_study(config)


__all__ = [name for name in dir(_core) if not name.startswith("_")]
__all__.append("run_study")
