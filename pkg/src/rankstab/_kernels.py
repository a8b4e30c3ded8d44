"""Kernel backend selection.

RANKSTAB_KERNELS=numba forces the jitted path (ImportError propagates if
numba is unavailable), =numpy forces the pure-numpy reference path, and
anything else (or unset) prefers numba with a numpy fallback. Both paths
produce bit-identical outputs.
"""

from __future__ import annotations

import os

_choice = os.environ.get("RANKSTAB_KERNELS", "auto").strip().lower()

if _choice == "numpy":
    from . import _kernels_numpy as _impl
elif _choice == "numba":
    from . import _kernels_numba as _impl
else:
    try:
        from . import _kernels_numba as _impl
    except ImportError:
        from . import _kernels_numpy as _impl

BACKEND = _impl.BACKEND
grow_gini_tree = _impl.grow_gini_tree
grow_mse_tree = _impl.grow_mse_tree
predict_tree = _impl.predict_tree
