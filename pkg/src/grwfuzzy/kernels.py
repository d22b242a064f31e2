"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``GRWFUZZY_PURE_PYTHON=1`` forces the NumPy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("GRWFUZZY_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

log_total_mass = _impl.log_total_mass
grouped_log_mass = _impl.grouped_log_mass
hit_update = _impl.hit_update


def backend(name: str):
    """Return the kernel module for ``name`` ('python' or 'cython')."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
