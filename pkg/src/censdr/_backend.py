"""Backend selection for the O(n^2) kernel sums.

The compiled numba path is used when numba imports cleanly, unless the
environment variable ``CENSDR_BACKEND=numpy`` (or ``CENSDR_DISABLE_NUMBA=1``)
asks for the pure-numpy path.  Both paths compute the same quantities; the
numpy one materialises m x n weight matrices and is meant for portability
and cross-checking, not speed.
"""

import contextlib
import os
import warnings

BACKENDS = ("numba", "numpy")


def _initial_backend():
    requested = os.environ.get("CENSDR_BACKEND", "numba").strip().lower()
    if os.environ.get("CENSDR_DISABLE_NUMBA", "").strip() not in ("", "0"):
        requested = "numpy"
    if requested not in BACKENDS:
        warnings.warn(f"unknown CENSDR_BACKEND={requested!r}; using numba")
        requested = "numba"
    if requested == "numba":
        try:
            import numba  # noqa: F401
        except ImportError:
            warnings.warn("numba not importable; falling back to numpy kernels")
            requested = "numpy"
    return requested


_state = {"backend": _initial_backend()}


def get_backend():
    return _state["backend"]


def set_backend(name):
    if name not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {name!r}")
    if name == "numba":
        import numba  # noqa: F401
    _state["backend"] = name


@contextlib.contextmanager
def use_backend(name):
    """Temporarily switch the kernel backend (used by tests and benchmarks)."""
    old = get_backend()
    set_backend(name)
    try:
        yield
    finally:
        _state["backend"] = old
