"""Kernel backend selection.

Imports the compiled accelerator when it is available, falling back to the
pure-Python kernels otherwise. ``TOPOCT_PURE=1`` forces the fallback (used
by the benchmark and the cross-checking tests).
"""

from __future__ import annotations

import logging
import os

from . import _pure

log = logging.getLogger(__name__)

if os.environ.get("TOPOCT_PURE"):
    _impl = _pure
else:
    try:
        from . import _accel as _impl  # type: ignore[no-redef]
    except ImportError:  # extension not built
        log.info("compiled kernels unavailable; using pure-Python fallback")
        _impl = _pure

BACKEND_NAME: str = _impl.BACKEND_NAME
reduce_boundary = _impl.reduce_boundary
vr_cliques = _impl.vr_cliques
union_find_zero = _impl.union_find_zero


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('accel', 'pure' or None=active)."""
    if name is None or name == BACKEND_NAME:
        return _impl
    if name == "pure":
        return _pure
    if name == "accel":
        from . import _accel
        return _accel
    raise ValueError(f"unknown backend {name!r}")
