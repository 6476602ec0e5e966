"""Python interface to the fimlab C++ core.

Exposes the model families, maximum likelihood solvers, simultaneous
perturbation utilities, and Monte Carlo Fisher information estimators.
"""

from ._fimlab import *  # noqa: F401,F403

from . import _fimlab as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
