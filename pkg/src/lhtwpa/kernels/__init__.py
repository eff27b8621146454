"""Compiled inner loops (numba) with interpreted fallbacks."""

from .fwm import STATUS_MAX_STEPS, STATUS_OK, STATUS_STEP_UNDERFLOW, dp45_fwm
from .lattice import STATUS_NEWTON, STATUS_UNSTABLE, lattice_run

__all__ = [
    "dp45_fwm",
    "lattice_run",
    "STATUS_OK",
    "STATUS_MAX_STEPS",
    "STATUS_STEP_UNDERFLOW",
    "STATUS_NEWTON",
    "STATUS_UNSTABLE",
]
