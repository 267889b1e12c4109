"""Stable continuous-state branching processes: simulation, closed forms and verification."""
from .stable_levy import StableParams, Path, psi, simulate_path, first_passage, dual_path
from .special_functions import mittag_leffler, scale_W, scale_Z
from .results import MCEstimate, IdentityCheck

__version__ = "0.1.0"

__all__ = [
    "StableParams", "Path", "psi", "simulate_path", "first_passage", "dual_path",
    "mittag_leffler", "scale_W", "scale_Z", "MCEstimate", "IdentityCheck", "__version__",
]
