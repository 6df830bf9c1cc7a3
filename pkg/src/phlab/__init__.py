"""phlab: a desk-scale laboratory for partially hyperbolic estimates.

Modules:
  spectral   block-diagonal cocycles and spectral certificates
  ledger     derived constants and the bunching auditor
  dynamics   nonlinear map sequences with exact derivatives
  manifolds  graph-transform invariant manifolds
  holonomy   stable holonomies, approximants, and diagnostics
  charts     Lyapunov charts and globalization for toy systems
  cli        the experiment command line
"""

from .kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
