"""Kernel backend selection.

The compiled extension is used when it imports; set ``DVPP_PURE_PYTHON=1``
to force the reference implementation.
"""

import os

from . import _kernels_py

if os.environ.get("DVPP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

df2t_step = _impl.df2t_step
df2t_filter = _impl.df2t_filter
rst_step = _impl.rst_step

__all__ = ["BACKEND", "df2t_step", "df2t_filter", "rst_step"]
