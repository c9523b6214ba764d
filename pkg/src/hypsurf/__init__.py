"""Pointed hyperbolic surfaces in edge-length coordinates.

Delaunay tessellations, injectivity radius at the marked vertex, the
local-maximum criterion and injectivity-radius increasing flows.
"""

from .catalog import (
    REFERENCE,
    S_STAR,
    genus2_equilateral,
    genus2_octagon,
    genus2_squares,
    punctured_torus_square,
)
from .developer import criterion_check, delaunay, develop, flip, injectivity_radius
from .errors import (
    BudgetExceeded,
    CoefficientDegenerate,
    ConvergenceError,
    DomainError,
    FlowError,
    FlowStalled,
    HypSurfError,
    PlacementError,
    ValidationError,
)
from .surface import CombTriangulation, MarkedSurface, angle_sum, compact, cusp, solve_dependent_length

__version__ = "0.1.0"
