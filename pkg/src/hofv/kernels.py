"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise, or when
``HOFV_PURE_PYTHON=1`` is set in the environment, the numpy fallback is
loaded. Both expose ``assemble_rows``, ``pi_sweep`` and ``eval_points``.
"""
import os

from . import _kernels_py

python_backend = _kernels_py

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("HOFV_PURE_PYTHON", "") in ("", "0"):
    active = compiled_backend
else:
    active = python_backend

BACKEND = active.BACKEND


def get_backend(name=None):
    """Return a kernel module by name (``"cython"``/``"python"``), or the active one."""
    if name is None:
        return active
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not available; build the extension")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
