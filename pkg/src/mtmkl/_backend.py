"""Select the SMO core at import: compiled extension if present, numpy otherwise.

Set MTMKL_FORCE_PYTHON_SMO=1 to skip the extension (used by the benchmark
and the twin-equivalence tests).
"""

from __future__ import annotations

import os

from . import _smo_py

if os.environ.get("MTMKL_FORCE_PYTHON_SMO"):
    _core = _smo_py
else:
    try:
        from . import _smo_cy as _core  # type: ignore[no-redef]
    except ImportError:
        _core = _smo_py

smo_solve = _core.smo_solve
kkt_violation = _smo_py.kkt_violation
SMO_BACKEND: str = _core.BACKEND
