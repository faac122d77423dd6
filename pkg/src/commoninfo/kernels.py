"""Backend selection for the optimizer kernels.

The compiled extension is used when it imported cleanly; otherwise the numpy
reference implementation. Both expose route_a_step and aux_tables with
identical semantics (see _kernels_py). set_backend forces one explicitly,
mainly for the equivalence tests and the benchmark.
"""
from types import SimpleNamespace

from . import _kernels_py
from .errors import InvalidConfig

try:
    from . import _kernels_cy

    _HAVE_CY = True
except ImportError:
    _kernels_cy = None
    _HAVE_CY = False

_BACKENDS = {"python": _kernels_py}
if _HAVE_CY:
    _BACKENDS["cython"] = _kernels_cy

_active = "cython" if _HAVE_CY else "python"


def available_backends():
    return tuple(sorted(_BACKENDS))


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise InvalidConfig(
            f"unknown backend {name!r}; available: {available_backends()}"
        )
    _active = name


def active():
    """The module implementing the kernel API for the current backend."""
    return _BACKENDS[_active]
