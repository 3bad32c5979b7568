"""Propagation kernel backend selection.

The compiled extension is preferred; the pure-numpy kernels are the
fallback.  Setting CHAOSBOUND_PURE_PYTHON=1 forces the fallback (used by
the benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("CHAOSBOUND_PURE_PYTHON"):
    from . import _kern_np as _backend

    HAVE_COMPILED = False
else:
    try:
        from . import _core as _backend  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        from . import _kern_np as _backend

        HAVE_COMPILED = False


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"


propagate_otoc = _backend.propagate_otoc
propagate_section = _backend.propagate_section
