"""Energy-aware cloud federation formation toolkit.

Exact energy-minimizing VM placement over provider coalitions, the
coalition value and payoff division built on it, hedonic coalition
formation with stability certificates, exact core-emptiness analysis,
and a deterministic randomized-experiment harness.
"""

from .domain import (
    HostClass, VmClass, ShareMatrix, Host, Vm, Provider, MigrationParams,
    Scenario, power_draw, cpu_share, ram_share, validate_scenario,
    load_scenario, save_scenario, InfeasibleShareError,
)
from .placement import (
    PlacementProblem, Allocation, SolveReport, build_problem, objective_value,
    solve_naive, solve_symmetric, heuristic_ffd, allocation_by_owner,
    PlacementError, PlacementInfeasibleError, ConstraintViolation,
)
from .coalitional import (
    CharacteristicTable, PayoffVector, coalition_key, coalition_value,
    shapley_payoffs, marginal_contribution, InfeasibleCoalitionError,
)
from .hedonic import (
    Partition, HistorySet, Preference, FormationTrace, RoundRobin,
    RandomOrder, FixedOrder, preference, find_shift, apply_shift,
    run_formation, is_nash_stable, is_individually_stable,
    enumerate_partitions, bell_number, format_partition, parse_partition_spec,
)
from .core_analysis import (
    CoreProblem, CoreResult, check_core, bondareva_violation,
    UnbalancedWeightsError,
)
from .workbench import (
    GeneratorConfig, RunRecord, BatchSummary, generate_scenario, evaluate_run,
    run_batch, reproduce,
)

__version__ = "0.1.0"
