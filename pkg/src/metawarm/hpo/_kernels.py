"""Pick the compiled tree kernels when importable, else the numpy fallback.

Set ``METAWARM_PURE_PYTHON=1`` to force the fallback.
"""
import os
from types import ModuleType

from . import _tree_py


def _load_compiled() -> ModuleType | None:
    if os.environ.get("METAWARM_PURE_PYTHON") == "1":
        return None
    try:
        from . import _tree_ext
    except ImportError:
        return None
    return _tree_ext


_compiled = _load_compiled()
kernels: ModuleType = _compiled or _tree_py
BACKEND = "compiled" if _compiled is not None else "python"


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _tree_py
    if name == "compiled":
        if _compiled is None:
            from . import _tree_ext  # raises ImportError with the real reason
            return _tree_ext
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


def compiled_available() -> bool:
    try:
        get_backend("compiled")
    except ImportError:
        return False
    return True
