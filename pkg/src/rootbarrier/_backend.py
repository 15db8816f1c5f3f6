"""Backend selection: compiled extension if importable, NumPy fallback otherwise.

Set ``ROOTBARRIER_FORCE_PYTHON=1`` to force the fallback (used by the
benchmark and by backend-parity tests).
"""

import os

if os.environ.get("ROOTBARRIER_FORCE_PYTHON") == "1":
    from . import _kernels_py as kernels

    HAVE_COMPILED = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels

        HAVE_COMPILED = False


def backend_name():
    return kernels.BACKEND
