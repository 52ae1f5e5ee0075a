"""Two-phase scheduling of moldable jobs on several resource types.

Phase one picks an allocation vector per job (LP rounding for general DAGs,
an FPTAS for series-parallel graphs, an exact sweep for independent jobs)
and caps it; phase two list-schedules the capped jobs.
"""

from .alloc_general import (
    AllocationError,
    adjust_allocation,
    build_dtct,
    objective_values,
    prune_dominated,
    round_allocation,
    select_parameters,
    solve_fractional,
)
from .alloc_special import (
    NotSeriesParallel,
    allocate_independent,
    fptas_allocate,
    recognize_sp,
)
from .core import (
    ExecProfile,
    Instance,
    Job,
    ResourceProfile,
    Schedule,
    ValidationError,
    aggregate_metrics,
    validate_monotonicity,
    validate_schedule,
)
from .instances import GeneratorConfig, LowerBoundBundle, generate, load, save
from .oracles import OracleBudget, OracleRefusal, exact_min_L
from .pipeline import RunOptions, RunReport, run_instance
from .scheduler import (
    PriorityPolicy,
    brute_force_makespan,
    interval_report,
    list_schedule,
    verify_phase_bounds,
)

__version__ = "0.1.0"
