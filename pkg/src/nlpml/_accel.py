"""Backend selection for the hot loops.

Numba is used when importable unless ``NLPML_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs through its pure-numpy twin.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("NLPML_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError
    from numba import njit  # noqa: F401

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
