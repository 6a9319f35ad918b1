"""Backend selection for the numeric kernels.

The compiled extension ``sava._ckernels`` is used when it imports; otherwise
the pure-Python ``sava._pykernels`` is used. Setting ``SAVA_PURE_PYTHON=1``
forces the fallback. Both backends expose the same four functions:

``absorb_hoeffding``, ``absorb_gaussian``, ``hoeffding_batch``,
``signed_rank_counts``.
"""
import os

from . import _pykernels

_BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _ckernels = None
else:
    _BACKENDS["cython"] = _ckernels


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable kernel backend {name!r}; "
            f"available: {available_backends()}"
        ) from None


def _select():
    if os.environ.get("SAVA_PURE_PYTHON", "").strip() not in ("", "0"):
        return _pykernels
    return _BACKENDS.get("cython", _pykernels)


_active = _select()
BACKEND = _active.NAME

absorb_hoeffding = _active.absorb_hoeffding
absorb_gaussian = _active.absorb_gaussian
hoeffding_batch = _active.hoeffding_batch
signed_rank_counts = _active.signed_rank_counts

__all__ = [
    "BACKEND",
    "absorb_gaussian",
    "absorb_hoeffding",
    "available_backends",
    "get_backend",
    "hoeffding_batch",
    "signed_rank_counts",
]
