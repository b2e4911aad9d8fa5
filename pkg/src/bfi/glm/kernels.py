"""Kernel backend selection.

The compiled extension is used when importable; set ``BFI_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active one.
"""

import os

from . import _kernels_py

_compiled = None
if os.environ.get("BFI_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

if _compiled is not None:
    loglik = _compiled.loglik
    loglik_grad_hess = _compiled.loglik_grad_hess
    BACKEND = "cython"
else:
    loglik = _kernels_py.loglik
    loglik_grad_hess = _kernels_py.loglik_grad_hess
    BACKEND = "numpy"

BACKENDS = {"numpy": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled
