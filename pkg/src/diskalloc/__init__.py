"""Deterministic solvers for multi-stage data file allocation on
capacity-limited parallel disks, with budget-constrained reconfiguration
between stages."""

from .errors import (
    DiskAllocError,
    DocumentError,
    EnumerationCapError,
    InfeasibleError,
    ValidationError,
)
from .model import (
    Allocation,
    CostModel,
    DiskSpec,
    FileSpec,
    Instance,
    ProblemClass,
    RelocationMove,
    RelocationPlan,
    Stage,
    Trajectory,
    apply_plan,
    canonical_edge,
    validate_instance,
)
from .relations import (
    Community,
    Condensation,
    IntegratedRelation,
    condense_files,
    detect_communities,
    expand_allocation,
    integrate_relations,
    split_oversized_component,
)
from .allocator import (
    EXACT_CAP_DEFAULT,
    FeasibilityReport,
    ObjectiveReport,
    ObjectiveTerm,
    PairWeights,
    check_allocation_feasible,
    evaluate_objective,
    exact_solve,
    local_search,
    solve_stage,
    spread_allocate,
)
from .restructure import (
    RestructureMode,
    RestructureResult,
    RestructuringProblem,
    TrajectoryStrategy,
    paper_replay_trajectories,
    plan_trajectory,
    relocation_diff,
    restructure_one_stage,
)
from .io import (
    SolutionDocument,
    SolutionStage,
    SolutionTransition,
    allocation_from_solution_stage,
    dump_document,
    emit_instance_document,
    emit_solution_document,
    parse_instance,
    parse_instance_document,
    parse_solution,
    parse_solution_document,
    solution_from_allocation,
    solution_from_trajectory,
    write_document,
)
from .generator import generate_instance
from .fixtures import load_paper_example, paper_example_path
from .report import emit_report

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Community",
    "Condensation",
    "CostModel",
    "DiskAllocError",
    "DiskSpec",
    "DocumentError",
    "EnumerationCapError",
    "EXACT_CAP_DEFAULT",
    "FeasibilityReport",
    "FileSpec",
    "InfeasibleError",
    "Instance",
    "IntegratedRelation",
    "ObjectiveReport",
    "ObjectiveTerm",
    "PairWeights",
    "ProblemClass",
    "RelocationMove",
    "RelocationPlan",
    "RestructureMode",
    "RestructureResult",
    "RestructuringProblem",
    "SolutionDocument",
    "SolutionStage",
    "SolutionTransition",
    "Stage",
    "Trajectory",
    "TrajectoryStrategy",
    "ValidationError",
    "allocation_from_solution_stage",
    "apply_plan",
    "canonical_edge",
    "check_allocation_feasible",
    "condense_files",
    "detect_communities",
    "dump_document",
    "emit_instance_document",
    "emit_report",
    "emit_solution_document",
    "evaluate_objective",
    "exact_solve",
    "expand_allocation",
    "generate_instance",
    "integrate_relations",
    "load_paper_example",
    "local_search",
    "paper_example_path",
    "paper_replay_trajectories",
    "parse_instance",
    "parse_instance_document",
    "parse_solution",
    "parse_solution_document",
    "plan_trajectory",
    "relocation_diff",
    "restructure_one_stage",
    "solution_from_allocation",
    "solution_from_trajectory",
    "solve_stage",
    "split_oversized_component",
    "spread_allocate",
    "validate_instance",
    "write_document",
]
