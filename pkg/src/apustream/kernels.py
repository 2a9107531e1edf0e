"""Kernel dispatch: numba-jitted hot loops with a pure-numpy fallback.

The backend is chosen once at import time from the ``APUSTREAM_NUMBA``
environment variable:

* ``"1"``  force the numba backend (ImportError if numba is unusable),
* ``"0"``  force the pure-numpy backend,
* unset / ``"auto"``  use numba when it imports, numpy otherwise.

Both backends implement the same contracts; ``bench/bench_kernels.py``
compares their throughput.
"""

from __future__ import annotations

import os

from . import _kernels_numpy as _np_impl

_FLAG = os.environ.get("APUSTREAM_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "false", "off", "no"):
    _impl = _np_impl
    USING_NUMBA = False
elif _FLAG in ("1", "true", "on", "yes"):
    from . import _kernels_numba as _impl  # noqa: F401

    USING_NUMBA = True
else:
    try:
        from . import _kernels_numba as _impl  # type: ignore[no-redef]

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        _impl = _np_impl
        USING_NUMBA = False

BACKEND = "numba" if USING_NUMBA else "numpy"

push_full = _impl.push_full
bank_stats = _impl.bank_stats
welford_vec = _impl.welford_vec
leaf_update = _impl.leaf_update
best_splits = _impl.best_splits
simulate_hysteresis = _impl.simulate_hysteresis

numpy_backend = _np_impl


def numba_backend():
    """Import and return the numba twin module (raises if unavailable)."""
    from . import _kernels_numba

    return _kernels_numba


def warm_up() -> None:
    """Trigger JIT compilation of every kernel so timings exclude it."""
    import numpy as np

    ring = np.zeros((2, 4))
    sorted_vals = np.zeros((2, 4))
    push_full(ring, sorted_vals, 0, np.array([1.0, -1.0]))
    bank_stats(sorted_vals, 1, 2, 3)
    welford_vec(0.0, np.zeros(3), np.zeros(3), np.ones(3), 1.0)
    counts = np.zeros(2)
    means = np.zeros((3, 2))
    m2s = np.zeros((3, 2))
    mins = np.full(3, np.inf)
    maxs = np.full(3, -np.inf)
    leaf_update(counts, means, m2s, mins, maxs, np.ones(3), 1, 1.0)
    best_splits(counts, means, m2s, mins, maxs, 3)
    simulate_hysteresis(np.full(8, 0.01), 9.0, 8.5, 9.5, 0.05)
