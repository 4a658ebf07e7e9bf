"""Kernel backend selection.

The package prefers the compiled Cython kernels and falls back to the pure
Python mirror when the extension is unavailable.  Both expose the same
functions and produce bit-identical output for equal seeds; only throughput
differs.  Set the environment variable ``LQFSIM_FORCE_PYTHON=1`` before
import to force the fallback.
"""

import os

from lqfsim import _kernel_py


def load_compiled():
    """Return the compiled kernel module, or None if it is not importable."""
    try:
        from lqfsim import _kernel
    except ImportError:
        return None
    return _kernel


if os.environ.get("LQFSIM_FORCE_PYTHON") == "1":
    kernel = _kernel_py
else:
    kernel = load_compiled() or _kernel_py

HAVE_COMPILED = kernel.BACKEND_NAME == "compiled"


def get_kernel(backend=None):
    """Resolve a backend name ('compiled', 'python' or None for default)."""
    if backend is None:
        return kernel
    if backend == "python":
        return _kernel_py
    if backend == "compiled":
        compiled = load_compiled()
        if compiled is None:
            raise RuntimeError("compiled kernel requested but not built")
        return compiled
    raise ValueError(f"unknown backend {backend!r}")
