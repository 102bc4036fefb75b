"""Kernel backend selection.

The training chains ship in two interchangeable implementations: numba-
jitted loops (fast) and pure numpy (no compile step, no extra dependency).
Selection order:

1. ``set_backend("numba" | "numpy")`` from code,
2. the ``DP_RELU_BACKEND`` environment variable,
3. ``auto``: numba when importable, else numpy.

``benchmarks/backend_bench.py`` times the two against each other.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_ENV_VAR = "DP_RELU_BACKEND"
_active: str | None = None


def available_backends() -> tuple[str, ...]:
    try:
        import numba  # noqa: F401

        return ("numba", "numpy")
    except ImportError:
        return ("numpy",)


def _resolve(name: str) -> str:
    name = name.lower()
    if name == "auto":
        return "numba" if "numba" in available_backends() else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected numba, numpy, or auto")
    if name == "numba" and "numba" not in available_backends():
        raise RuntimeError("numba backend requested but numba is not installed")
    return name


def set_backend(name: str) -> None:
    global _active
    _active = _resolve(name)


def backend_name() -> str:
    global _active
    if _active is None:
        _active = _resolve(os.environ.get(_ENV_VAR, "auto"))
    return _active


def kernels():
    """The active kernel module (glmtron_path / dp_glmtron_path / dp_minibatch_path)."""
    if backend_name() == "numba":
        from . import _kernels_numba

        return _kernels_numba
    return _kernels_numpy


def warmup() -> str:
    """Pre-compile jitted kernels (no-op on the numpy backend)."""
    mod = kernels()
    if hasattr(mod, "warmup"):
        mod.warmup()
    return backend_name()
