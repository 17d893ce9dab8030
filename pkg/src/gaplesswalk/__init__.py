"""Three-step discrete-time quantum walk: topology and criticality toolkit."""
from .kernels import BACKEND as KERNEL_BACKEND
from .walk_core import CoinAngles, bloch_vector, gap_at, quasi_energy, walk_unitary

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "CoinAngles",
    "bloch_vector",
    "gap_at",
    "quasi_energy",
    "walk_unitary",
    "__version__",
]
