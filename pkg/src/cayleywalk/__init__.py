"""Random transpositions and the metric geometry of the symmetric group."""
from ._accel import USING_NUMBA
from .perm import (
    COAGULATION,
    FRAGMENTATION,
    CycleStructure,
    MinimalDecomposition,
    Permutation,
    Transposition,
    apply_transposition,
    canonical_decomposition,
    cayley_distance,
    compose,
    cycle_structure,
    identity,
    inverse,
)

__version__ = "0.1.0"
