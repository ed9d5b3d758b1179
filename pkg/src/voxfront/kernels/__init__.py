"""Kernel backend dispatch.

VOXFRONT_BACKEND selects the implementation of the hot loops:
  * "numba" - require the compiled backend, raise if numba is unavailable
  * "numpy" - force the pure-numpy fallback
  * "auto" (default) - numba when importable, else numpy
"""

from __future__ import annotations

import os

_choice = os.environ.get("VOXFRONT_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"VOXFRONT_BACKEND={_choice!r} not recognized; use auto, numba, or numpy"
    )

if _choice == "numpy":
    from . import numpy_backend as _impl

    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl  # type: ignore[no-redef]

        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_backend as _impl  # type: ignore[no-redef]

        BACKEND = "numpy"

cast_rays = _impl.cast_rays
integrate_rays = _impl.integrate_rays
gate_values = _impl.gate_values
visible_out_count = _impl.visible_out_count
astar_grid = _impl.astar_grid

__all__ = [
    "BACKEND",
    "cast_rays",
    "integrate_rays",
    "gate_values",
    "visible_out_count",
    "astar_grid",
]
