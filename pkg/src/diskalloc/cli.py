"""Command-line interface.

Subcommands: solve, evaluate, diff, restructure, trajectory, oracle,
generate. Reports go to stdout; ``--output PATH`` writes the matching JSON
document. Exit codes: 0 success, 1 infeasible, 2 usage or document errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .allocator import EXACT_CAP_DEFAULT, evaluate_objective, check_allocation_feasible, exact_solve, solve_stage
from .errors import (
    DocumentError,
    EnumerationCapError,
    InfeasibleError,
    ValidationError,
)
from .generator import generate_instance
from .io import (
    SolutionDocument,
    SolutionStage,
    SolutionTransition,
    allocation_from_solution_stage,
    dump_document,
    emit_solution_document,
    parse_instance,
    parse_solution,
    solution_from_allocation,
    solution_from_trajectory,
    write_document,
)
from .report import (
    diff_report,
    evaluation_report,
    relations_report,
    solution_report,
    trajectory_report,
)
from .restructure import (
    RestructureMode,
    RestructuringProblem,
    TrajectoryStrategy,
    paper_replay_trajectories,
    plan_trajectory,
    relocation_diff,
    restructure_one_stage,
)

_STRATEGIES = {
    "independent": TrajectoryStrategy.INDEPENDENT_OPTIMAL,
    "sequential": TrajectoryStrategy.SEQUENTIAL_RESTRUCTURED,
    "replay": TrajectoryStrategy.PAPER_REPLAY,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diskalloc",
        description=(
            "Deterministic solvers for allocating data files onto "
            "capacity-limited parallel disks across processing stages."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="allocate one stage's files")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--stage", type=int, required=True)
    group = solve.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true", help="force exhaustive search")
    group.add_argument(
        "--local-search", action="store_true", help="force the heuristic path"
    )
    solve.add_argument(
        "--dump-relations",
        action="store_true",
        help="also print the stage's relations and communities",
    )
    solve.add_argument("--output")

    evaluate = sub.add_parser("evaluate", help="score an existing allocation")
    evaluate.add_argument("--instance", required=True)
    evaluate.add_argument("--solution", required=True)
    evaluate.add_argument("--stage", type=int, required=True)
    evaluate.add_argument("--output")

    diff = sub.add_parser("diff", help="relocation plan between two solutions")
    diff.add_argument("--from", dest="src", required=True)
    diff.add_argument("--to", dest="dst", required=True)
    diff.add_argument("--output")

    restructure = sub.add_parser(
        "restructure", help="adapt a previous allocation within a budget"
    )
    restructure.add_argument("--instance", required=True)
    restructure.add_argument("--stage", type=int, required=True)
    restructure.add_argument("--previous", required=True)
    restructure.add_argument("--budget", type=float, required=True)
    restructure.add_argument(
        "--mode", choices=["exact", "greedy"], default="exact"
    )
    restructure.add_argument("--output")

    trajectory = sub.add_parser("trajectory", help="plan all stages")
    trajectory.add_argument("--instance", required=True)
    trajectory.add_argument(
        "--strategy", choices=sorted(_STRATEGIES), required=True
    )
    trajectory.add_argument(
        "--budgets", help="per-transition budgets, comma separated"
    )
    trajectory.add_argument("--mode", choices=["exact", "greedy"], default="exact")
    trajectory.add_argument("--output")

    oracle = sub.add_parser(
        "oracle", help="certified optimum of one stage by exhaustive search"
    )
    oracle.add_argument("--instance", required=True)
    oracle.add_argument("--stage", type=int, required=True)
    oracle.add_argument("--output")

    generate = sub.add_parser("generate", help="emit a seeded random instance")
    generate.add_argument("--n-files", type=int, required=True)
    generate.add_argument("--gamma", type=int, required=True)
    generate.add_argument("--n-stages", type=int, required=True)
    generate.add_argument("--edge-density", type=float, required=True)
    generate.add_argument(
        "--size-range", type=int, nargs=2, required=True, metavar=("LO", "HI")
    )
    generate.add_argument("--capacity-slack", type=float, required=True)
    generate.add_argument("--seed", type=int, required=True)
    generate.add_argument("--output")

    return parser


def _single_stage(doc: SolutionDocument, label: str) -> SolutionStage:
    if len(doc.stages) != 1:
        raise ValidationError(
            f"{label} must hold exactly one stage entry, found {len(doc.stages)}"
        )
    return doc.stages[0]


def _parse_budgets(raw: Optional[str]) -> Optional[list[float]]:
    if raw is None:
        return None
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(
            f"budgets must be comma-separated numbers, got {raw!r}"
        ) from None


def _cmd_solve(args) -> int:
    instance = parse_instance(args.instance)
    exact: Optional[bool] = None
    if args.exact:
        exact = True
    elif args.local_search:
        exact = False
    alloc, psi, certified = solve_stage(
        instance, args.stage, exact=exact, cap=EXACT_CAP_DEFAULT
    )
    if args.dump_relations:
        print(relations_report(instance, args.stage))
    print(evaluation_report(alloc, instance, args.stage))
    if not certified:
        print("objective is heuristic, not certified optimal")
    if args.output:
        doc = solution_from_allocation(alloc, args.stage, objective=psi)
        write_document(emit_solution_document(doc), args.output)
    return 0


def _cmd_evaluate(args) -> int:
    instance = parse_instance(args.instance)
    solution = parse_solution(args.solution)
    stage = instance.stage(args.stage)
    # A lone stage entry scores against any target stage; multi-stage
    # documents must carry an entry for the requested one.
    if len(solution.stages) == 1:
        sol_stage = solution.stages[0]
    else:
        sol_stage = solution.stage(args.stage)
    alloc = allocation_from_solution_stage(sol_stage)
    feasibility = check_allocation_feasible(alloc, stage, instance)
    if not feasibility.feasible:
        raise InfeasibleError("; ".join(feasibility.violations))
    report = evaluate_objective(alloc, stage, instance.cost_model, sizes=instance.sizes)
    print(evaluation_report(alloc, instance, args.stage))
    if args.output:
        doc = solution_from_allocation(alloc, args.stage, objective=report.value)
        write_document(emit_solution_document(doc), args.output)
    return 0


def _cmd_diff(args) -> int:
    src = _single_stage(parse_solution(args.src), "--from solution")
    dst = _single_stage(parse_solution(args.dst), "--to solution")
    plan = relocation_diff(
        allocation_from_solution_stage(src), allocation_from_solution_stage(dst)
    )
    print(diff_report(plan))
    if args.output:
        doc = SolutionDocument(
            stages=(),
            transitions=(
                SolutionTransition(
                    from_stage=src.index,
                    to_stage=dst.index,
                    moves=plan.moves,
                    h=plan.total_cost,
                ),
            ),
            total_modification_cost=plan.total_cost,
        )
        write_document(emit_solution_document(doc), args.output)
    return 0


def _cmd_restructure(args) -> int:
    instance = parse_instance(args.instance)
    previous_stage = _single_stage(parse_solution(args.previous), "--previous solution")
    previous = allocation_from_solution_stage(previous_stage)
    problem = RestructuringProblem(
        instance=instance,
        stage=instance.stage(args.stage),
        previous=previous,
        budget=args.budget,
    )
    result = restructure_one_stage(problem, RestructureMode(args.mode))
    doc = SolutionDocument(
        stages=(
            SolutionStage(
                index=args.stage,
                assignment=result.allocation.assignment,
                objective=result.objective,
                rho=result.proximity,
            ),
        ),
        transitions=(
            SolutionTransition(
                from_stage=previous_stage.index,
                to_stage=args.stage,
                moves=result.plan.moves,
                h=result.plan.total_cost,
            ),
        ),
        total_modification_cost=result.plan.total_cost,
    )
    print(solution_report(doc, instance))
    if not result.certified:
        print("reference optimum is heuristic, not certified")
    if args.output:
        write_document(emit_solution_document(doc), args.output)
    return 0


def _cmd_trajectory(args) -> int:
    instance = parse_instance(args.instance)
    strategy = _STRATEGIES[args.strategy]
    budgets = _parse_budgets(args.budgets)
    if strategy is TrajectoryStrategy.PAPER_REPLAY:
        stage_optimal, restructured = paper_replay_trajectories(instance)
        print(trajectory_report(stage_optimal, instance))
        print()
        print(trajectory_report(restructured, instance))
        traj = restructured
    else:
        traj = plan_trajectory(
            instance, strategy, budgets, mode=RestructureMode(args.mode)
        )
        print(trajectory_report(traj, instance))
    if args.output:
        doc = solution_from_trajectory(traj)
        write_document(emit_solution_document(doc), args.output)
    return 0


def _cmd_oracle(args) -> int:
    instance = parse_instance(args.instance)
    stage = instance.stage(args.stage)
    alloc, psi = exact_solve(stage, instance)
    doc = solution_from_allocation(alloc, args.stage, objective=psi, rho=0.0)
    print(solution_report(doc, instance))
    if args.output:
        write_document(emit_solution_document(doc), args.output)
    return 0


def _cmd_generate(args) -> int:
    doc = generate_instance(
        n_files=args.n_files,
        gamma=args.gamma,
        n_stages=args.n_stages,
        edge_density=args.edge_density,
        size_range=tuple(args.size_range),
        capacity_slack=args.capacity_slack,
        seed=args.seed,
    )
    if args.output:
        write_document(doc, args.output)
    else:
        print(dump_document(doc))
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "evaluate": _cmd_evaluate,
    "diff": _cmd_diff,
    "restructure": _cmd_restructure,
    "trajectory": _cmd_trajectory,
    "oracle": _cmd_oracle,
    "generate": _cmd_generate,
}


def run_command(argv: Sequence[str]) -> int:
    """Parse and run one command line; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:  # argparse handles usage and --help itself
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DocumentError, ValidationError, EnumerationCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)
