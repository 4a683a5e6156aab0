"""Hot-kernel dispatch: compiled extension when available, pure Python otherwise.

Set ``ESM_FORCE_PY_KERNELS=1`` to force the pure twin (used by the
benchmark and the cross-twin equivalence tests). ``IMPL`` reports which
twin is active.
"""

import os

if os.environ.get("ESM_FORCE_PY_KERNELS") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

IMPL = _impl.IMPL

candle_splits = _impl.candle_splits
window_sums = _impl.window_sums
find_extrema = _impl.find_extrema
detect_fold = _impl.detect_fold

PEAK = 1
TROUGH = -1
