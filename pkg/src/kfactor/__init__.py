"""Clique factors in randomly perturbed graphs: exact solvers, constructions and experiments."""

from .errors import (ConstructionError, DimensionError, InputFormatError, KFactorError, ParameterError,
                     RejectedInput, SizeLimitError)
from .graph import Graph
from .factor import has_factor, verify_factor
from .perturbation import PerturbationPlan, derive_seed, perturb

__all__ = ["ConstructionError", "DimensionError", "Graph", "InputFormatError", "KFactorError",
           "ParameterError", "PerturbationPlan", "RejectedInput", "SizeLimitError", "derive_seed",
           "has_factor", "perturb", "verify_factor"]
__version__ = "0.1.0"
