"""Backend selection for the fit kernels.

The compiled extension is used when it imported; otherwise the pure
Python fallback takes over transparently.  Set LOBFIT_KERNEL=python or
LOBFIT_KERNEL=native before import to force a choice (forcing native
raises if the extension is missing).
"""

from __future__ import annotations

import os

from lobfit import _pykernels

_requested = os.environ.get("LOBFIT_KERNEL", "auto")

if _requested == "python":
    _impl = _pykernels
elif _requested == "native":
    from lobfit import _native as _impl  # noqa: F401 - explicit request
elif _requested == "auto":
    try:
        from lobfit import _native as _impl
    except ImportError:
        _impl = _pykernels
else:
    raise ValueError(
        f"LOBFIT_KERNEL must be auto, python or native, got {_requested!r}")

BACKEND: str = _impl.BACKEND

KIND_DW = _pykernels.KIND_DW
KIND_BB = _pykernels.KIND_BB
KIND_POW = _pykernels.KIND_POW

objective = _impl.objective
minimize = _impl.minimize
