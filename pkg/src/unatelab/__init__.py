"""Relative-error unateness testing: algorithms, oracles, and harness."""

from .config import FAST, FULL, Constants
from .functions import (
    BiasProfile,
    BooleanFunction,
    CallableFunction,
    DenseFunction,
    EmptyFunctionError,
    SparseFunction,
    TruncatedFunction,
    bias_profile,
    function_from_json,
    function_to_json,
    nontrivial_coordinates,
    rel_dist,
    truncate,
    truncate_at_point,
)
from .hypercube import (
    BitPoint,
    DimensionMismatchError,
    Edge,
    EdgeClass,
    PartialVector,
    classify_edge,
    hamming_distance,
)
from .oracle import OracleSession, adaptivity_audit
from .subroutines import (
    Accepted,
    EdgeWitness,
    FarPairWitness,
    Rejected,
    Returned,
    biased_test,
    binary_search_violation,
    check_samples,
    confirm_direction,
    iterative_bias,
    preprocessing,
    run_traced,
    unbiased_test,
)
from .testers import TestReport, run_tester, test_known_n, test_unknown_n

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
