"""Evans functions by shooting on Grassmann manifolds."""

from .errors import EvansError
from .evans import (EvansValue, Method, MethodConfig, ShotState, SpectralProblem,
                    compound_oracle_evans, evans_eval, find_root, init_subspace, shoot,
                    square_contour, winding_number)
from .manifold import ChartRep, PatchIndex, StiefelFrame, qoge

__all__ = ["ChartRep", "EvansError", "EvansValue", "Method", "MethodConfig", "PatchIndex",
           "ShotState", "SpectralProblem", "StiefelFrame", "compound_oracle_evans", "evans_eval",
           "find_root", "init_subspace", "qoge", "shoot", "square_contour", "winding_number"]
