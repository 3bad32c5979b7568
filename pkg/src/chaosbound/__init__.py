"""OTOC growth rates and the chaos bound for a chaotic 2D double well.

Classical, ring-polymer, and exact quantum out-of-time-ordered
correlators; Lyapunov extraction; instanton analysis of the bound.
"""

__version__ = "0.1.0"

from .kernels import HAVE_COMPILED, backend_name
from .potential import DoubleWell2D, PotentialParams

__all__ = [
    "DoubleWell2D",
    "PotentialParams",
    "HAVE_COMPILED",
    "backend_name",
    "__version__",
]
