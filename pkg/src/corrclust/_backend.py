"""Pick the compiled kernels when importable, else the pure-Python twins.

Set ``CORRCLUST_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("CORRCLUST_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as kernels
    except ImportError:
        kernels = _fallback
        BACKEND = "python"
    else:
        BACKEND = "compiled"
