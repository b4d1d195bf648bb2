"""Engine selection: compiled core if available, pure Python otherwise.

Set MARSIM_PURE_PY=1 to force the Python engine (used by the parity tests
and the benchmark).  Both engines expose the same simulate()/Tables API and
produce bit-identical results.
"""

from __future__ import annotations

import os

from . import _kernel_py

if os.environ.get("MARSIM_PURE_PY") == "1":
    _impl = _kernel_py
else:
    try:
        from . import _kernel as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernel_py

active = _impl
pure_python = _kernel_py

try:
    from . import _kernel as compiled  # noqa: F401
except ImportError:
    compiled = None

COMPILED = bool(getattr(active, "COMPILED", False))
