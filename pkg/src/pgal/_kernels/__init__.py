"""Kernel backend selection: compiled extension when built, numpy otherwise.

Set PGAL_KERNEL=python to force the fallback (used by the benchmark and by
tests that exercise both code paths).
"""
import os

from pgal._kernels import brandes_py

try:
    from pgal._kernels._brandes_cy import brandes as _compiled_brandes
except ImportError:
    _compiled_brandes = None

_forced = os.environ.get("PGAL_KERNEL", "").strip().lower()
if _forced == "python" or _compiled_brandes is None:
    brandes = brandes_py.brandes
    BACKEND = "python"
else:
    brandes = _compiled_brandes
    BACKEND = "compiled"


def available_backends():
    """Mapping of backend name to its brandes callable (compiled may be absent)."""
    backends = {"python": brandes_py.brandes}
    if _compiled_brandes is not None:
        backends["compiled"] = _compiled_brandes
    return backends
