"""Nonnegative rank of small tensors: rank-2 decisions and decompositions,
binary tree models, and two rank-3 case studies."""
from .exceptions import (
    DecompositionError,
    ModeError,
    NegativeEntryError,
    NotInModelError,
    RefusedInputError,
    SearchTooLargeError,
)
from .rank2 import (
    DecisionResult,
    classify_boundary,
    compress_to_binary,
    decide,
    decompose,
    decompose_222,
    hyperdeterminant,
    mu,
    nonneg_matrix_rank2,
    u_quantities,
)
from .supermodular import find_pi, is_pi_supermodular, toric_cells
from .tensor import Rank2Decomposition, flatten, flattening_rank, matrix_rank, tensor_from_rank2

__version__ = "0.1.0"

__all__ = [
    "DecisionResult",
    "DecompositionError",
    "ModeError",
    "NegativeEntryError",
    "NotInModelError",
    "Rank2Decomposition",
    "RefusedInputError",
    "SearchTooLargeError",
    "classify_boundary",
    "compress_to_binary",
    "decide",
    "decompose",
    "decompose_222",
    "find_pi",
    "flatten",
    "flattening_rank",
    "hyperdeterminant",
    "is_pi_supermodular",
    "matrix_rank",
    "mu",
    "nonneg_matrix_rank2",
    "tensor_from_rank2",
    "toric_cells",
    "u_quantities",
]
