"""Kernel backend selection.

The compiled Cython backend is preferred when its extension module imports;
otherwise the pure-Python backend is used.  Set ``MFTUBE_PURE_KERNELS=1`` to
force the pure backend (used by the equivalence tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("MFTUBE_PURE_KERNELS", "") == "1":
    from mftube._kernels import _pykernels as _impl
else:
    try:
        from mftube._kernels import _ckernels as _impl  # type: ignore
    except ImportError:
        from mftube._kernels import _pykernels as _impl

BACKEND = _impl.BACKEND
cut_set_arrays = _impl.cut_set_arrays
rescaled_b_sum = _impl.rescaled_b_sum
measure_interval_batch = _impl.measure_interval_batch
gap_excess = _impl.gap_excess
