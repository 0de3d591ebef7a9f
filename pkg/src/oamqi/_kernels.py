"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it imports; otherwise the
numpy fallback in ``_pykernels``. Set ``OAMQI_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("OAMQI_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

h_integrand = _impl.h_integrand
h_panel = _impl.h_panel
count_coincidences = _impl.count_coincidences
count_coincidences_many = _impl.count_coincidences_many


def backends():
    """Available kernel modules keyed by name (for parity tests and benchmarks)."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
