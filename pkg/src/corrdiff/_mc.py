"""Backend selection for the Monte Carlo kernels.

The compiled core is used when it imports; ``CORRDIFF_MC_BACKEND=numpy``
forces the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _mc_fallback

try:
    from . import _mc_core as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None


def available() -> list[str]:
    names = [_mc_fallback.NAME]
    if _compiled is not None:
        names.insert(0, _compiled.NAME)
    return names


def backend(name: str | None = None) -> ModuleType:
    name = name or os.environ.get("CORRDIFF_MC_BACKEND") or "auto"
    if name == "auto":
        return _compiled if _compiled is not None else _mc_fallback
    if name == _mc_fallback.NAME:
        return _mc_fallback
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled Monte Carlo core is not built")
        return _compiled
    raise ValueError(f"unknown Monte Carlo backend {name!r}")
