"""Backend selection for the hot kernels.

The compiled extension is used when importable; set
``BOTNET_DETECT_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("BOTNET_DETECT_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
pair_weights = _impl.pair_weights
louvain_local_moving = _impl.louvain_local_moving
