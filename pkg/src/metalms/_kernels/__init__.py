"""Engine selection: compiled kernel when present, numpy fallback otherwise.

``active_engine()`` reports which one is in use; ``get_engine`` lets
tests and benchmarks request a specific implementation, and the
METALMS_ENGINE environment variable ('python' or 'cython') overrides the
default for a whole process.
"""

import os

from . import pyref

try:
    from . import _clms as _compiled
except ImportError:
    _compiled = None

_forced = os.environ.get("METALMS_ENGINE")
if _forced == "python":
    _default = pyref
elif _forced == "cython":
    if _compiled is None:
        raise ImportError("METALMS_ENGINE=cython but the kernel is not built")
    _default = _compiled
else:
    _default = _compiled if _compiled is not None else pyref


def active_engine():
    return _default.ENGINE_NAME


def available_engines():
    names = ["python"]
    if _compiled is not None:
        names.append("cython")
    return names


def get_engine(name="auto"):
    if name in ("auto", None):
        return _default
    if name == "python":
        return pyref
    if name == "cython":
        if _compiled is None:
            raise ValueError("compiled kernel not available in this install")
        return _compiled
    raise ValueError(f"unknown engine {name!r}")


def run_dense(*args, engine="auto", **kwargs):
    return get_engine(engine).run_dense(*args, **kwargs)
