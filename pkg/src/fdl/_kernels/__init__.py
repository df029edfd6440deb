"""Kernel backend selection.

The compiled extension (_fast, Cython) is used when importable; otherwise the
pure-numpy reference (pyref) takes over. Set FDL_PURE_PYTHON=1 to force the
fallback, e.g. for benchmarking or debugging.
"""

import os

from . import pyref

if os.environ.get("FDL_PURE_PYTHON") == "1":
    _impl = pyref
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pyref

BACKEND = _impl.BACKEND
hermitian_scatter = _impl.hermitian_scatter
kde_gauss = _impl.kde_gauss
logistic_gd_batch = _impl.logistic_gd_batch
