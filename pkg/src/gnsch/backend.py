"""Kernel backend selection.

The compiled Cython extension is preferred when importable; the pure-NumPy
module is the fallback. ``GNSCH_BACKEND=python`` or ``GNSCH_BACKEND=compiled``
forces a choice (the latter raises if the extension is missing).
"""

import os

from . import _kernels_py

_requested = os.environ.get("GNSCH_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _kernels_py
elif _requested == "compiled":
    from . import _kernels as _impl  # noqa: F401  (ImportError is the intended failure)
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.NAME
csr_matvec = _impl.csr_matvec
shift_combo = _impl.shift_combo
coupled_matvec = _impl.coupled_matvec


def available_backends():
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names
