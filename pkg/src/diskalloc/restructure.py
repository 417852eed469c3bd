"""Budget-constrained restructuring and multi-stage trajectory planning.

Instead of re-solving a stage from scratch, restructuring starts from the
allocation already on the disks and buys improvement with relocation moves,
each priced at the instance's unit cost. The proximity rho of the result is
its objective's excess over the stage's reference optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Mapping, Optional, Sequence

from .errors import EnumerationCapError, InfeasibleError, ValidationError
from .model import (
    Allocation,
    Instance,
    RelocationMove,
    RelocationPlan,
    Stage,
    Trajectory,
)
from .allocator import (
    EXACT_CAP_DEFAULT,
    PairWeights,
    _pinned_loads,
    exact_solve,
    local_search,
    spread_allocate,
)
from .relations import detect_communities, integrate_relations

# Exact restructuring refuses search spaces larger than this many nodes.
_RESTRUCTURE_SPACE_CAP = 5_000_000

_EPS = 1e-9


def relocation_diff(src: Allocation, dst: Allocation, unit_cost: float = 1.0) -> RelocationPlan:
    """Relocation plan turning ``src`` into ``dst``: one move per file whose
    disk differs, ordered by file id. Both allocations must cover the same
    file set."""
    src_files = set(src.assignment)
    dst_files = set(dst.assignment)
    if src_files != dst_files:
        extra = sorted(src_files ^ dst_files)
        raise ValidationError(f"allocations cover different file sets: {extra}")
    moves = tuple(
        RelocationMove(f, src.assignment[f], dst.assignment[f])
        for f in sorted(src_files)
        if src.assignment[f] != dst.assignment[f]
    )
    return RelocationPlan(moves, total_cost=len(moves) * float(unit_cost))


def _transition_plan(prev: Allocation, new: Allocation, unit_cost: float) -> RelocationPlan:
    """Moves of the files present in both allocations; files appearing or
    disappearing between stages are not relocations and carry no cost."""
    common = sorted(set(prev.assignment) & set(new.assignment))
    moves = tuple(
        RelocationMove(f, prev.assignment[f], new.assignment[f])
        for f in common
        if prev.assignment[f] != new.assignment[f]
    )
    return RelocationPlan(moves, total_cost=len(moves) * float(unit_cost))


class RestructureMode(str, Enum):
    EXACT = "exact"
    GREEDY = "greedy"


class TrajectoryStrategy(str, Enum):
    INDEPENDENT_OPTIMAL = "independent_optimal"
    SEQUENTIAL_RESTRUCTURED = "sequential_restructured"
    PAPER_REPLAY = "paper_replay"


@dataclass(frozen=True)
class RestructuringProblem:
    """Improve ``previous`` for ``stage`` without spending more than
    ``budget`` on relocations. ``reference`` declares the stage's optimum
    when the caller already knows it; left None, it is computed."""

    instance: Instance
    stage: Stage
    previous: Allocation
    budget: float
    reference: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "budget", float(self.budget))
        if self.budget < 0:
            raise ValidationError("restructuring budget must be non-negative")
        if self.reference is not None:
            object.__setattr__(self, "reference", float(self.reference))


@dataclass(frozen=True)
class RestructureResult:
    allocation: Allocation
    proximity: float
    objective: float
    reference: float
    certified: bool
    plan: RelocationPlan


def _move_allowance(budget: float, unit_cost: float, n_movable: int) -> int:
    """Integer move allowance; free relocations unlock every movable file."""
    if unit_cost <= 0:
        return n_movable
    return int(math.floor(budget / unit_cost + _EPS))


def _reference_optimum(
    problem: RestructuringProblem,
    fixed: Mapping[int, int],
    cap: int,
) -> tuple[float, bool]:
    """Stage optimum for proximity reporting: declared, or enumerated when
    the stage fits the cap, or the heuristic's best (uncertified)."""
    if problem.reference is not None:
        return problem.reference, False
    stage, instance = problem.stage, problem.instance
    try:
        _, psi_star = exact_solve(stage, instance, cap=cap, pinned=fixed)
        return psi_star, True
    except EnumerationCapError:
        relation = integrate_relations(stage)
        free = [f for f in stage.active_files if f not in fixed]
        communities = detect_communities(relation, free, instance.gamma)
        seeded = spread_allocate(communities, instance, stage, pinned=fixed)
        _, psi = local_search(seeded, stage, instance, pinned=fixed)
        return psi, False


def _place_new_files(
    files: Sequence[int],
    assignment: dict[int, int],
    loads: dict[int, int],
    instance: Instance,
) -> None:
    """Initial spot for files with no previous disk: most residual capacity,
    ties to the lowest disk id. Placement of a new file is not a move."""
    sizes = instance.sizes
    capacities = instance.capacities
    for f in files:
        fits = [d for d in sorted(capacities) if loads[d] + sizes[f] <= capacities[d]]
        if not fits:
            raise InfeasibleError(f"file {f} ({sizes[f]} tracks) fits on no disk")
        best = max(fits, key=lambda d: (capacities[d] - loads[d], -d))
        assignment[f] = best
        loads[best] += sizes[f]


def restructure_one_stage(
    problem: RestructuringProblem,
    mode: RestructureMode = RestructureMode.EXACT,
    *,
    cap: int = EXACT_CAP_DEFAULT,
    pinned: Optional[Mapping[int, int]] = None,
) -> RestructureResult:
    """Best allocation reachable from the previous one within the budget.

    Exact mode enumerates every capacity-feasible placement that keeps the
    number of moved files within the allowance, minimizing (objective, move
    count, assignment) lexicographically. Greedy mode repeatedly applies
    the single move or disk swap that most reduces the objective while the
    result stays within the allowance.

    Files of the previous allocation that are inactive in the target stage
    hold their disks and are never moved. Active files absent from the
    previous allocation are placed fresh; placing them costs nothing.
    """
    mode = RestructureMode(mode)
    instance, stage, previous = problem.instance, problem.stage, problem.previous
    sizes = instance.sizes
    capacities = instance.capacities
    unit = instance.relocation_unit_cost
    active = stage.active_set

    fixed = {f: d for f, d in previous.assignment.items() if f not in active}
    if pinned is not None:
        for f, d in pinned.items():
            fixed[int(f)] = int(d)
    loads = _pinned_loads(fixed, sizes, capacities)

    searched = [f for f in stage.active_files if f not in fixed]
    base = {f: previous.assignment.get(f) for f in searched}

    # The unmodified allocation must fit; a previous allocation that
    # overfills a disk for this stage is rejected outright.
    trial = dict(loads)
    for f in searched:
        d = base[f]
        if d is None:
            continue
        if d not in capacities:
            raise ValidationError(f"previous allocation puts file {f} on unknown disk {d}")
        trial[d] += sizes[f]
        if trial[d] > capacities[d]:
            raise InfeasibleError("previous allocation infeasible for stage")

    based = [f for f in searched if base[f] is not None]
    new_files = [f for f in searched if base[f] is None]
    m = _move_allowance(problem.budget, unit, len(based))

    psi_star, certified = _reference_optimum(problem, fixed, cap)
    weights = PairWeights(stage)
    disks = sorted(capacities)

    # Active pinned files contribute interference but never move.
    active_fixed: dict[int, list[int]] = {d: [] for d in disks}
    for f, d in fixed.items():
        if f in active:
            active_fixed[d].append(f)
    base_psi = weights.psi(active_fixed)

    if mode is RestructureMode.EXACT:
        k = min(m, len(based))
        gamma = max(len(disks), 1)
        space = math.comb(len(based), k) * max(gamma - 1, 1) ** k * gamma ** len(new_files)
        if space > _RESTRUCTURE_SPACE_CAP:
            raise EnumerationCapError(
                f"exact restructuring space of {space} nodes exceeds the cap "
                f"of {_RESTRUCTURE_SPACE_CAP}; use greedy mode"
            )
        assignment = _restructure_exact(
            searched, base, m, weights, sizes, capacities, loads, active_fixed, base_psi
        )
    else:
        assignment = _restructure_greedy(
            searched, base, m, weights, instance, loads, active_fixed
        )

    final = dict(fixed)
    final.update(assignment)
    alloc = Allocation(final)

    by_disk: dict[int, list[int]] = {}
    for f in stage.active_files:
        by_disk.setdefault(final[f], []).append(f)
    psi = weights.psi(by_disk)

    if psi < psi_star:
        if certified:
            raise AssertionError(
                "restructuring beat a certified optimum; enumeration is broken"
            )
        psi_star = psi
    rho = psi - psi_star

    moves = tuple(
        RelocationMove(f, base[f], assignment[f])
        for f in sorted(based)
        if assignment[f] != base[f]
    )
    plan = RelocationPlan(moves, total_cost=len(moves) * unit)
    if unit > 0 and plan.total_cost > problem.budget + _EPS:
        raise AssertionError("restructuring plan exceeds its budget")
    return RestructureResult(
        allocation=alloc,
        proximity=rho,
        objective=psi,
        reference=psi_star,
        certified=certified,
        plan=plan,
    )


def _restructure_exact(
    searched: Sequence[int],
    base: Mapping[int, Optional[int]],
    allowance: int,
    weights: PairWeights,
    sizes: Mapping[int, int],
    capacities: Mapping[int, int],
    pinned_loads: Mapping[int, int],
    active_fixed: Mapping[int, list[int]],
    base_psi: float,
) -> dict[int, int]:
    """Depth-first search over placements within the move allowance.

    Minimizes (objective, moves used, assignment vector); leaves are
    visited in ascending assignment order, so the first recorded optimum
    is the lexicographically least.
    """
    files = list(searched)
    n = len(files)
    disks = sorted(capacities)
    loads = dict(pinned_loads)
    on_disk: dict[int, list[int]] = {d: list(active_fixed[d]) for d in disks}

    best: Optional[list[int]] = None
    best_psi = float("inf")
    best_moves = 0
    chosen: list[int] = []

    def descend(i: int, partial: float, used: int) -> None:
        nonlocal best, best_psi, best_moves
        if best is not None and (
            partial > best_psi or (partial == best_psi and used >= best_moves)
        ):
            return
        if i == n:
            best = chosen.copy()
            best_psi = partial
            best_moves = used
            return
        f = files[i]
        size = sizes[f]
        home = base[f]
        for d in disks:
            if loads[d] + size > capacities[d]:
                continue
            cost = 0 if home is None or d == home else 1
            if used + cost > allowance:
                continue
            step = weights.attach_cost(f, on_disk[d])
            loads[d] += size
            on_disk[d].append(f)
            chosen.append(d)
            descend(i + 1, partial + step, used + cost)
            chosen.pop()
            on_disk[d].pop()
            loads[d] -= size

    descend(0, base_psi, 0)
    if best is None:
        raise InfeasibleError("no placement within the move allowance fits the disks")
    return dict(zip(files, best))


def _restructure_greedy(
    searched: Sequence[int],
    base: Mapping[int, Optional[int]],
    allowance: int,
    weights: PairWeights,
    instance: Instance,
    pinned_loads: Mapping[int, int],
    active_fixed: Mapping[int, list[int]],
) -> dict[int, int]:
    """Best-improvement descent: apply the move or swap with the largest
    objective drop whose result stays within the move allowance; ties go
    to the first candidate in scan order (moves before swaps, ascending)."""
    sizes = instance.sizes
    capacities = instance.capacities
    disks = sorted(capacities)

    assignment: dict[int, int] = {}
    loads = dict(pinned_loads)
    for f in searched:
        if base[f] is not None:
            assignment[f] = base[f]
            loads[base[f]] += sizes[f]
    _place_new_files(
        [f for f in searched if base[f] is None], assignment, loads, instance
    )

    on_disk: dict[int, set[int]] = {d: set(active_fixed[d]) for d in disks}
    for f, d in assignment.items():
        on_disk[d].add(f)

    def moved_count() -> int:
        return sum(1 for f in searched if base[f] is not None and assignment[f] != base[f])

    def attach(f: int, d: int) -> float:
        return weights.attach_cost(f, on_disk[d])

    h = moved_count()
    while True:
        best_delta = 0.0
        best_action = None
        for f in searched:
            src = assignment[f]
            detach = attach(f, src)
            for dst in disks:
                if dst == src:
                    continue
                if loads[dst] + sizes[f] > capacities[dst]:
                    continue
                nh = h
                if base[f] is not None:
                    nh += (1 if dst != base[f] else 0) - (1 if src != base[f] else 0)
                if nh > allowance:
                    continue
                delta = attach(f, dst) - detach
                if delta < best_delta:
                    best_delta = delta
                    best_action = ("move", f, dst, nh)
        for a, b in combinations(searched, 2):
            da, db = assignment[a], assignment[b]
            if da == db:
                continue
            if loads[da] - sizes[a] + sizes[b] > capacities[da]:
                continue
            if loads[db] - sizes[b] + sizes[a] > capacities[db]:
                continue
            nh = h
            if base[a] is not None:
                nh += (1 if db != base[a] else 0) - (1 if da != base[a] else 0)
            if base[b] is not None:
                nh += (1 if da != base[b] else 0) - (1 if db != base[b] else 0)
            if nh > allowance:
                continue
            w_ab = weights.weight(a, b)
            delta = (
                attach(a, db)
                - w_ab
                + attach(b, da)
                - w_ab
                - attach(a, da)
                - attach(b, db)
            )
            if delta < best_delta:
                best_delta = delta
                best_action = ("swap", a, b, nh)
        if best_action is None:
            break
        if best_action[0] == "move":
            _, f, dst, h = best_action
            src = assignment[f]
            assignment[f] = dst
            on_disk[src].discard(f)
            on_disk[dst].add(f)
            loads[src] -= sizes[f]
            loads[dst] += sizes[f]
        else:
            _, a, b, h = best_action
            da, db = assignment[a], assignment[b]
            assignment[a], assignment[b] = db, da
            on_disk[da].discard(a)
            on_disk[db].add(a)
            on_disk[db].discard(b)
            on_disk[da].add(b)
            loads[da] += sizes[b] - sizes[a]
            loads[db] += sizes[a] - sizes[b]
    return assignment


def _solve_fresh(
    stage: Stage,
    instance: Instance,
    pinned: Mapping[int, int],
    cap: int,
) -> tuple[Allocation, float, float, bool]:
    """Solve one stage from scratch: exact within the cap, heuristic past
    it. Returns (allocation, objective, reference, certified)."""
    try:
        alloc, psi = exact_solve(stage, instance, cap=cap, pinned=pinned)
        return alloc, psi, psi, True
    except EnumerationCapError:
        relation = integrate_relations(stage)
        free = [f for f in stage.active_files if f not in pinned]
        communities = detect_communities(relation, free, instance.gamma)
        seeded = spread_allocate(communities, instance, stage, pinned=pinned)
        alloc, psi = local_search(seeded, stage, instance, pinned=pinned)
        return alloc, psi, psi, False


def plan_trajectory(
    instance: Instance,
    strategy: TrajectoryStrategy,
    budgets: Optional[Sequence[float]] = None,
    *,
    mode: RestructureMode = RestructureMode.EXACT,
    cap: int = EXACT_CAP_DEFAULT,
) -> Trajectory:
    """Allocations for every stage plus the relocation plans between them.

    ``independent_optimal`` re-solves each stage from scratch and prices
    the literal differences between consecutive solutions. With
    ``sequential_restructured``, each stage after the first is restructured
    from its predecessor within the matching entry of ``budgets`` (one per
    transition). ``paper_replay`` reproduces the restructured chain
    recorded for the bundled example verbatim.
    """
    strategy = TrajectoryStrategy(strategy)
    if strategy is TrajectoryStrategy.PAPER_REPLAY:
        _, restructured = paper_replay_trajectories(instance)
        return restructured

    stages = instance.stages
    unit = instance.relocation_unit_cost
    if strategy is TrajectoryStrategy.SEQUENTIAL_RESTRUCTURED:
        if budgets is None or len(budgets) != len(stages) - 1:
            need = len(stages) - 1
            got = "none" if budgets is None else str(len(budgets))
            raise ValidationError(
                f"sequential restructuring needs {need} budgets (one per "
                f"transition), got {got}"
            )

    placed: dict[int, int] = {}
    allocations: list[Allocation] = []
    plans: list[RelocationPlan] = []
    objectives: list[float] = []
    optima: list[float] = []
    proximities: list[float] = []
    certified: list[bool] = []

    for pos, stage in enumerate(stages):
        pinned = {f: d for f, d in placed.items() if f not in stage.active_set}
        if pos == 0 or strategy is TrajectoryStrategy.INDEPENDENT_OPTIMAL:
            alloc, psi, psi_star, cert = _solve_fresh(stage, instance, pinned, cap)
            rho = psi - psi_star
            if pos > 0:
                plans.append(_transition_plan(allocations[-1], alloc, unit))
        else:
            problem = RestructuringProblem(
                instance=instance,
                stage=stage,
                previous=allocations[-1],
                budget=float(budgets[pos - 1]),
            )
            extra = {
                f: d
                for f, d in pinned.items()
                if f not in allocations[-1].assignment
            }
            result = restructure_one_stage(problem, mode, cap=cap, pinned=extra)
            alloc = result.allocation
            psi, psi_star = result.objective, result.reference
            rho, cert = result.proximity, result.certified
            plans.append(result.plan)
        allocations.append(alloc)
        objectives.append(psi)
        optima.append(psi_star)
        proximities.append(rho)
        certified.append(cert)
        placed.update(alloc.assignment)

    return Trajectory(
        strategy=strategy.value,
        stage_indices=tuple(s.index for s in stages),
        allocations=tuple(allocations),
        plans=tuple(plans),
        objectives=tuple(objectives),
        optima=tuple(optima),
        proximities=tuple(proximities),
        certified=tuple(certified),
        total_modification_cost=sum(p.total_cost for p in plans),
    )


def paper_replay_trajectories(instance: Instance) -> tuple[Trajectory, Trajectory]:
    """The two recorded solution chains of the bundled example, verbatim.

    Returns (stage-optimal chain, restructured chain). Objectives are
    recomputed from the recorded allocations; move lists and their costs
    are carried exactly as recorded. Raises ValidationError for any other
    instance: the recorded data is meaningless elsewhere.
    """
    from . import fixtures
    from .allocator import evaluate_objective

    if instance != fixtures.load_paper_example():
        raise ValidationError(
            "replay is only defined for the bundled example instance"
        )
    unit = instance.relocation_unit_cost
    optima = []
    for stage in instance.stages:
        _, psi_star = exact_solve(stage, instance)
        optima.append(psi_star)

    def build(name: str, assignments, move_lists) -> Trajectory:
        allocations = tuple(Allocation(a) for a in assignments)
        objectives = tuple(
            evaluate_objective(alloc, stage).value
            for alloc, stage in zip(allocations, instance.stages)
        )
        plans = tuple(
            RelocationPlan(
                tuple(RelocationMove(f, s, d) for f, s, d in moves),
                total_cost=len(moves) * unit,
            )
            for moves in move_lists
        )
        return Trajectory(
            strategy=name,
            stage_indices=tuple(s.index for s in instance.stages),
            allocations=allocations,
            plans=plans,
            objectives=objectives,
            optima=tuple(optima),
            proximities=tuple(
                max(psi - star, 0.0) for psi, star in zip(objectives, optima)
            ),
            certified=tuple(True for _ in instance.stages),
            total_modification_cost=sum(p.total_cost for p in plans),
        )

    stage_optimal = build(
        "paper_replay", fixtures.STAGE_OPTIMAL_ASSIGNMENTS, fixtures.STAGE_OPTIMAL_MOVES
    )
    restructured = build(
        "paper_replay", fixtures.RESTRUCTURED_ASSIGNMENTS, fixtures.RESTRUCTURED_MOVES
    )
    return stage_optimal, restructured
