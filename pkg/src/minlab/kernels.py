"""Selects the compiled march kernel when it is built, else the numpy fallback."""
from __future__ import annotations

import os

try:
    if os.environ.get("MINLAB_PURE_PYTHON"):
        raise ImportError("compiled kernel disabled by MINLAB_PURE_PYTHON")
    from ._kernels import march_lines as _compiled
except ImportError:
    _compiled = None

from ._march_py import march_lines as march_lines_py

BACKEND = "cython" if _compiled is not None else "numpy"


def march_lines(root, omega, aux, h0, psi0, weights, starts, step, theta, kind, axis, steps):
    """Dispatch to the selected backend (arguments as in ``minlab._march_py.march_lines``)."""
    if _compiled is None:
        return march_lines_py(root, omega, aux, h0, psi0, weights, starts, step, theta, kind, axis, steps)
    import numpy as np

    return _compiled(np.ascontiguousarray(root, dtype=complex), np.ascontiguousarray(omega, dtype=float),
                     np.ascontiguousarray(aux, dtype=float), h0, psi0,
                     np.ascontiguousarray(weights, dtype=float), np.ascontiguousarray(starts, dtype=np.int64),
                     float(step), float(theta), int(kind), int(axis), int(steps))
