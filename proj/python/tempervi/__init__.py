"""Annealed and tempered stochastic variational inference for conditionally
conjugate exponential family models (LDA and a factorial mixture)."""

from pkgutil import extend_path

# Lets a build tree that holds only the compiled extension supply it.
__path__ = extend_path(__path__, __name__)

from ._tempervi import *  # noqa: E402,F401,F403
from ._tempervi import fmm, lda  # noqa: E402,F401

__version__ = "0.1.0"
