"""Backend selection: compiled Cython kernels with a pure-numpy fallback.

The compiled extension is preferred when importable. Set the environment
variable MATSHRINK_BACKEND to "python" or "compiled" to force a choice
("compiled" raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("MATSHRINK_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise ValueError(f"MATSHRINK_BACKEND must be auto|compiled|python, got {_requested!r}")

HAVE_COMPILED = False
_compiled = None
if _requested in ("auto", "compiled"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        if _requested == "compiled":
            raise

_impl = _compiled if HAVE_COMPILED else _kernels_py
BACKEND = "compiled" if HAVE_COMPILED else "python"

is_posterior_mean = _impl.is_posterior_mean
is_posterior_mean_stein_mixture = _impl.is_posterior_mean_stein_mixture


def get_backend(name: str):
    """Return a specific backend module ("python" or "compiled") for benchmarks/tests."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
