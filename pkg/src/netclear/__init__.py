"""Exact clearing vectors and default-minimizing portfolio compression for
financial liability networks."""

from .market import (
    ClearingVector,
    Compression,
    DefaultReport,
    FinancialMarket,
    apply_compression,
    check_clearing,
    income_def,
    income_nondef,
    is_bilateral,
    is_compression,
    is_cycle_compression,
    validate,
)
from .clearing import (
    clear_priority_proportional,
    clear_proportional,
    fixed_point_oracle,
)
from .compressflow import greedy_compress, reduce_to_acyclic, save_all_but_one
from .milp import build_milp, optimal_compress

__all__ = [
    "ClearingVector",
    "Compression",
    "DefaultReport",
    "FinancialMarket",
    "apply_compression",
    "build_milp",
    "check_clearing",
    "clear_priority_proportional",
    "clear_proportional",
    "fixed_point_oracle",
    "greedy_compress",
    "income_def",
    "income_nondef",
    "is_bilateral",
    "is_compression",
    "is_cycle_compression",
    "optimal_compress",
    "reduce_to_acyclic",
    "save_all_but_one",
    "validate",
]
