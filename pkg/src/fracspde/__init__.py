"""Simulation and verification tools for time-fractional stochastic PDEs on the torus.

The subpackages cover Mittag-Leffler evaluation, discrete fractional calculus,
the Fourier kernels of the mild solution, Brownian noise, the mild solver with
its quasi-linear Picard extension, and Monte Carlo norm estimation.
"""

from importlib.metadata import PackageNotFoundError, version as _version

from .errors import (AccuracyError, ContractError, ConvergenceError, DomainError, FracSPDEError,
                     ResourceError, SampleFailure)
from .frac_calculus import *  # noqa: F401,F403
from .frac_calculus import __all__ as _fc_all
from .mild_solver import *  # noqa: F401,F403
from .mild_solver import __all__ as _ms_all
from .mittag_leffler import *  # noqa: F401,F403
from .mittag_leffler import __all__ as _ml_all
from .noise import *  # noqa: F401,F403
from .noise import __all__ as _nz_all
from .norm_estimator import *  # noqa: F401,F403
from .norm_estimator import __all__ as _ne_all
from .spectral_kernels import *  # noqa: F401,F403
from .spectral_kernels import __all__ as _sk_all

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = (
    ["__version__", "FracSPDEError", "DomainError", "AccuracyError", "ResourceError", "ContractError",
     "ConvergenceError", "SampleFailure"]
    + list(_ml_all) + list(_fc_all) + list(_sk_all) + list(_nz_all) + list(_ms_all) + list(_ne_all)
)
