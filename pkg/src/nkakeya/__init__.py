"""Finite-scale N-Kakeya plate families and the weak-type endpoint experiment for quadratic manifolds."""

from .errors import (
    AnchorInfeasible,
    BudgetExhausted,
    ConfigError,
    DomainNotReduced,
    NKakeyaError,
    QuadratureUnresolved,
    ThresholdExceeded,
)
from .extension import BumpSpec, Field, big_plate, eval_extension, small_plate
from .grassmann import Box, NormalFamily, Plane, gr_distance, normal_net
from .kakeya import Assignment, Budget, build_prop_one_family, build_small_union_assignment
from .kernels import BACKEND
from .manifold import QuadraticManifold, codim2_example, parabola
from .norms import exponents, lp_norm, weak_lq_norm
from .plates import Plate, PlateFamily, coverage, rasterize

__version__ = "0.1.0"

__all__ = [
    "AnchorInfeasible",
    "Assignment",
    "BACKEND",
    "Box",
    "Budget",
    "BudgetExhausted",
    "BumpSpec",
    "ConfigError",
    "DomainNotReduced",
    "Field",
    "NKakeyaError",
    "NormalFamily",
    "Plane",
    "Plate",
    "PlateFamily",
    "QuadraticManifold",
    "QuadratureUnresolved",
    "ThresholdExceeded",
    "big_plate",
    "build_prop_one_family",
    "build_small_union_assignment",
    "codim2_example",
    "coverage",
    "eval_extension",
    "exponents",
    "gr_distance",
    "lp_norm",
    "normal_net",
    "parabola",
    "rasterize",
    "small_plate",
    "weak_lq_norm",
]
