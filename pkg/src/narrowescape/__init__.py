"""Narrow escape mean first passage times: formulas, dual-series solvers,
conformal maps and a reflected Brownian motion simulator."""

__version__ = "0.1.0"

from .asymptotics import (AsymptoticResult, c0_annulus, c0_rectangle, mfpt_annulus_avg,
                          mfpt_corner_leading, mfpt_cusp_leading, mfpt_leading_smooth,
                          mfpt_rectangle_avg, sphere_cap_mfpt_avg, sphere_cap_mfpt_point,
                          sphere_window_mfpt_avg, sphere_window_mfpt_point)
from .dualseries import (ConditioningError, ConvergenceError, DualSeriesProblem, SeriesSolution,
                         annulus_mean_mfpt, log_integral_identity, solve_collocation, solve_h1_neumann)
from .geometry import (Annulus, CornerFlatten, CuspMap, DecapitatedSphere, Disk, FullSphere, GeometryError,
                       Inversion, Rectangle, SingularityError, Stereographic, TangentCircles, Window,
                       area, corner_window, cusp_window, load_geometry, map_apply, map_invert, map_jacobian,
                       window_measures)
from .montecarlo import (CensoringError, McConfig, McEstimate, ResolutionError, Start, SweepTable,
                         simulate, simulate_planar, simulate_sphere, sweep)
