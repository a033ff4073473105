"""Numeric kernels with a compiled fast path.

The Cython extension `_ckernels` covers the hot spots of the training loop
(dense layers, light attention, Adam); `py_backend` is a numpy
implementation with identical semantics.  Selection happens once at import:
the compiled backend when available, else the Python one.  Set
THERMOFUSE_KERNELS=python or =c to force a backend (=c raises if the
extension is missing).
"""

import os

from thermofuse.kernels import py_backend

_requested = os.environ.get("THERMOFUSE_KERNELS", "auto").lower()

if _requested == "python":
    _impl = py_backend
elif _requested in ("auto", "c"):
    try:
        from thermofuse.kernels import _ckernels as _impl
    except ImportError:
        if _requested == "c":
            raise
        _impl = py_backend
else:
    raise RuntimeError(
        f"THERMOFUSE_KERNELS must be 'auto', 'c' or 'python', got {_requested!r}"
    )

backend_name: str = _impl.BACKEND

dense_fwd = _impl.dense_fwd
dense_bwd = _impl.dense_bwd
project_cols = _impl.project_cols
project_cols_bwd = _impl.project_cols_bwd
la_fwd = _impl.la_fwd
la_bwd = _impl.la_bwd
adam_update = _impl.adam_update


def available_backends() -> list[str]:
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        from thermofuse.kernels import _ckernels  # noqa: F401

        names.append("c")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return a backend module by name, for benchmarks and parity tests."""
    if name == "python":
        return py_backend
    if name == "c":
        from thermofuse.kernels import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
