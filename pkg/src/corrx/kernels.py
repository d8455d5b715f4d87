"""Backend selection for the filtering recursions.

The compiled extension ``corrx.recursions`` is used when importable; otherwise
the NumPy implementations in ``corrx.recursions_python`` are used.  Setting
``CORRX_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import os

from corrx import recursions_python

BACKEND = "python"
_impl = recursions_python
if os.environ.get("CORRX_BACKEND", "").lower() != "python":
    try:
        from corrx import recursions as _compiled
    except ImportError:  # pragma: no cover - depends on build
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

gjr_variance = _impl.gjr_variance
gjr_loglik_terms = _impl.gjr_loglik_terms
dcc_recursion = _impl.dcc_recursion

__all__ = ["BACKEND", "gjr_variance", "gjr_loglik_terms", "dcc_recursion"]
