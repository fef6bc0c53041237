"""Optimal vaccination control for SIRS epidemics.

Solves the minimal-discounted-cost problem for a vaccination planner via a
value recursion on the epidemic simplex, synthesizes the feedback vaccination
policy, simulates the closed loop and classifies long-run equilibria. See the
`cli` module / `sirsvax` entry point for the scenario driver.
"""

from .model import (
    EPS_DOM,
    CostModel,
    DomainError,
    EpidemicParams,
    GenericCost,
    Gradient,
    QuadraticCost,
    State,
    control_hamiltonian,
    drift,
    recovered_rate,
    reproduction_numbers,
    running_cost,
)
from .grid import SimplexGrid, interp_field
from .simulate import (
    ControlSchedule,
    SimulationError,
    Trajectory,
    infected_consistency_error,
    integrate,
)
from .hjb import (
    BruteForceBound,
    ResidualReport,
    SolveResult,
    SolverConfig,
    SolverError,
    ValueField,
    bellman_map,
    brute_force_upper_bound,
    hjb_residual,
    optimized_running_cost,
    second_difference_bound,
    solve,
    sup_diff_on_common_nodes,
)
from .policy import (
    FeedbackPolicy,
    NonConvexCostError,
    optimal_vaccination_generic,
    optimal_vaccination_quadratic,
    tabulate_policy,
)
from .closedloop import (
    ClosedLoopRun,
    CostEstimate,
    realized_discounted_cost,
    simulate_feedback,
    write_events_jsonl,
)
from .equilibria import EquilibriumReport, drift_norm, equilibrium_report, jacobian
from .kernels import backend_name

__version__ = "0.1.0"

__all__ = [
    "EPS_DOM",
    "BruteForceBound",
    "ClosedLoopRun",
    "ControlSchedule",
    "CostEstimate",
    "CostModel",
    "DomainError",
    "EpidemicParams",
    "EquilibriumReport",
    "FeedbackPolicy",
    "GenericCost",
    "Gradient",
    "NonConvexCostError",
    "QuadraticCost",
    "ResidualReport",
    "SimplexGrid",
    "SimulationError",
    "SolveResult",
    "SolverConfig",
    "SolverError",
    "State",
    "Trajectory",
    "ValueField",
    "backend_name",
    "bellman_map",
    "brute_force_upper_bound",
    "control_hamiltonian",
    "drift",
    "drift_norm",
    "equilibrium_report",
    "hjb_residual",
    "infected_consistency_error",
    "integrate",
    "interp_field",
    "jacobian",
    "optimal_vaccination_generic",
    "optimal_vaccination_quadratic",
    "optimized_running_cost",
    "realized_discounted_cost",
    "recovered_rate",
    "reproduction_numbers",
    "running_cost",
    "second_difference_bound",
    "simulate_feedback",
    "solve",
    "sup_diff_on_common_nodes",
    "tabulate_policy",
    "write_events_jsonl",
]
