"""Deterministic simulator and verification harness for leader-follower
bounded-confidence opinion dynamics.

Agents hold opinions in R^d and average over epsilon-neighbors each step;
leader groups mix toward fixed targets, followers mix toward the leader
groups they can see. Every run can be checked against the model's
contraction, invariance, and convergence guarantees with measured slack.
"""

from .analysis import (
    CheckReport,
    ConvergenceReport,
    MetricsRow,
    check_ball_invariance,
    check_consensus_bound,
    check_contraction,
    check_contraction_step,
    check_mixture_limit,
    check_subsystem_independence,
    check_target_envelope,
    check_target_envelope_all,
    detect_convergence,
    hk_reference_step,
    max_target_distance,
    metrics_rows,
    opinion_diameter,
)
from .dynamics import (
    StepWeights,
    Trajectory,
    follower_update,
    leader_update,
    run,
    step,
)
from .errors import (
    DimensionMismatch,
    FallbackToNaive,
    ScenarioValidationError,
    ScheduleViolation,
    ValidationIssue,
)
from .model import (
    EngineOptions,
    GroupId,
    NeighborSets,
    Partition,
    Scenario,
    SystemState,
    build_scenario,
    distance,
)
from .neighbors import GridIndex, compute_neighbors, neighbors_grid, neighbors_naive
from .scenario_io import load_scenario, save_canonical

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "ConvergenceReport",
    "DimensionMismatch",
    "EngineOptions",
    "FallbackToNaive",
    "GridIndex",
    "GroupId",
    "MetricsRow",
    "NeighborSets",
    "Partition",
    "Scenario",
    "ScenarioValidationError",
    "ScheduleViolation",
    "StepWeights",
    "SystemState",
    "Trajectory",
    "ValidationIssue",
    "build_scenario",
    "check_ball_invariance",
    "check_consensus_bound",
    "check_contraction",
    "check_contraction_step",
    "check_mixture_limit",
    "check_subsystem_independence",
    "check_target_envelope",
    "check_target_envelope_all",
    "compute_neighbors",
    "detect_convergence",
    "distance",
    "follower_update",
    "hk_reference_step",
    "leader_update",
    "load_scenario",
    "max_target_distance",
    "metrics_rows",
    "neighbors_grid",
    "neighbors_naive",
    "opinion_diameter",
    "run",
    "save_canonical",
    "step",
]
