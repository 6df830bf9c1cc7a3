"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the
numpy fallback takes over.  ``PHLAB_FORCE_NUMPY=1`` forces the fallback,
which is how the benchmark compares the two.
"""

import os

if os.environ.get("PHLAB_FORCE_NUMPY") == "1":
    from ._numpy import BACKEND, bump_deriv, bump_value, pert_eval, pert_jac
else:
    try:
        from ._ckern import BACKEND, bump_deriv, bump_value, pert_eval, pert_jac
    except ImportError:
        from ._numpy import BACKEND, bump_deriv, bump_value, pert_eval, pert_jac

__all__ = ["BACKEND", "bump_value", "bump_deriv", "pert_eval", "pert_jac"]
