"""Kernel selection: the compiled scan when it imports, the NumPy one otherwise.

Set ``NKAKEYA_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _scan

fallback_scan_sets = _scan.scan_sets

try:
    if os.environ.get("NKAKEYA_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from ._scan_ext import scan_sets as compiled_scan_sets
except ImportError:
    compiled_scan_sets = None

scan_sets = compiled_scan_sets or fallback_scan_sets
BACKEND = "compiled" if compiled_scan_sets is not None else "python"
