"""Pick the event-loop kernel at import time.

The compiled kernel is used when it was built; ``STICKY_PEP_PURE=1`` forces
the pure-Python one.
"""
import os

from . import _pykernel

if os.environ.get("STICKY_PEP_PURE") == "1":
    kernel = _pykernel
    BACKEND = "python"
else:
    try:
        from . import _ckernel as kernel
        BACKEND = "cython"
    except ImportError:
        kernel = _pykernel
        BACKEND = "python"

run_events = kernel.run_events
run_outcome = kernel.run_outcome
