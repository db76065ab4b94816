"""Multi-stage transmission, generation and storage expansion planning toolkit."""

__version__ = "0.1.0"

from .system import (
    SystemData,
    load_system,
    validate,
    annuity_factor,
    stage_discount,
    stage_load_factor,
)
from .rephours import cluster_chronological, dedupe_days, evaluate_representatives
from .lp import LinearProgram, make_lp, solve_lp, solve_milp, SolverTolerances

__all__ = [
    "SystemData", "load_system", "validate",
    "annuity_factor", "stage_discount", "stage_load_factor",
    "cluster_chronological", "dedupe_days", "evaluate_representatives",
    "LinearProgram", "make_lp", "solve_lp", "solve_milp", "SolverTolerances",
    "__version__",
]
