"""Line planning with resource constraints: LP relaxation and randomized rounding."""

__version__ = "0.1.0"

from .instance import (  # noqa: E402
    Arc, Bus, Instance, InstanceFormatError, Line, Network, ODPair, build_subpath_index,
    load_instance, load_od_csv, save_instance, validate,
)
from .relaxation import (  # noqa: E402
    Fixed, FractionalPlan, Full, LowCost, Modified, restrict_modified_costs, solve_pricing,
    solve_relaxation,
)
from .rounding import IntegralPlan, RoundingParams, check_feasibility, round_lc, round_nc  # noqa: E402
from .composite import algorithm_c, algorithm_c_tol, enumerate_a_delta  # noqa: E402
from .oracle import solve_allocation_exact, solve_exact  # noqa: E402

__all__ = [
    "Arc", "Bus", "Instance", "InstanceFormatError", "Line", "Network", "ODPair",
    "build_subpath_index", "load_instance", "load_od_csv", "save_instance", "validate",
    "Fixed", "FractionalPlan", "Full", "LowCost", "Modified", "restrict_modified_costs",
    "solve_pricing", "solve_relaxation", "IntegralPlan", "RoundingParams", "check_feasibility",
    "round_lc", "round_nc", "algorithm_c", "algorithm_c_tol", "enumerate_a_delta",
    "solve_allocation_exact", "solve_exact",
]
