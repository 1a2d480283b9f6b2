"""Monte Carlo simulation of reflected Brownian motion with absorbing windows.

The compiled kernel is used when it was built; setting the environment
variable NARROWESCAPE_PURE_PYTHON=1 selects the numpy implementation.
"""
from .core import (CENSOR_LIMIT, CSV_FIELDS, CensoringError, McConfig, McEstimate, ResolutionError,
                   Start, SweepTable, available_backends, default_backend, simulate, simulate_planar,
                   simulate_sphere, sweep)

__all__ = [
    "CENSOR_LIMIT", "CSV_FIELDS", "CensoringError", "McConfig", "McEstimate", "ResolutionError",
    "Start", "SweepTable", "available_backends", "default_backend", "simulate", "simulate_planar",
    "simulate_sphere", "sweep",
]
