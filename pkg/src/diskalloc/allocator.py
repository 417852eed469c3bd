"""Single-stage allocation: objective, spreading heuristic, local search,
exact enumeration, and feasibility checking.

All tie-breaks run ascending file id then ascending disk id, so every entry
point is deterministic for a given input. Files outside the stage's active
set may appear in an assignment (they keep their spot from an earlier
stage); they contribute nothing to the objective and are never moved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

from .errors import EnumerationCapError, InfeasibleError, ValidationError
from .model import Allocation, CostModel, Instance, Pair, Stage, canonical_edge
from .relations import Community, IntegratedRelation, detect_communities, integrate_relations

log = logging.getLogger(__name__)

# Exact search is exponential in the active file count; past this many files
# callers must opt in explicitly.
EXACT_CAP_DEFAULT = 12

# Local search gives up after this multiple of n^2 neighbour evaluations.
_LOCAL_SEARCH_EVAL_FACTOR = 10


class PairWeights:
    """Interference weight of every unordered file pair of one stage.

    Uniform convention: weight 1.0 on each edge of the integrated relation.
    Explicit movement probabilities: the two ordered entries of a pair add
    up on its unordered edge, whether or not the relation links the pair.
    """

    def __init__(self, stage: Stage, relation: Optional[IntegratedRelation] = None):
        if relation is None:
            relation = integrate_relations(stage)
        self.relation = relation
        weights: dict[Pair, float] = {}
        if stage.phi is None:
            for edge in relation.edges:
                weights[edge] = 1.0
        else:
            for (a, b), w in stage.phi.items():
                edge = canonical_edge(a, b)
                weights[edge] = weights.get(edge, 0.0) + w
            weights = {e: w for e, w in weights.items() if w != 0.0}
        self._weights = weights
        self._adjacent: dict[int, dict[int, float]] = {}
        for (a, b), w in weights.items():
            self._adjacent.setdefault(a, {})[b] = w
            self._adjacent.setdefault(b, {})[a] = w

    def weight(self, a: int, b: int) -> float:
        return self._weights.get(canonical_edge(a, b), 0.0)

    def pairs(self) -> list[tuple[Pair, float]]:
        return sorted(self._weights.items())

    def neighbours(self, f: int) -> Mapping[int, float]:
        return self._adjacent.get(f, {})

    def attach_cost(self, f: int, others: Iterable[int]) -> float:
        """Cost added by placing ``f`` next to ``others`` on one disk."""
        adj = self._adjacent.get(f)
        if not adj:
            return 0.0
        return sum(adj[g] for g in others if g in adj)

    def psi(self, by_disk: Mapping[int, Sequence[int]]) -> float:
        """Total same-disk interference of a placement."""
        total = 0.0
        for files in by_disk.values():
            fs = sorted(files)
            for i, a in enumerate(fs):
                adj = self._adjacent.get(a)
                if not adj:
                    continue
                for b in fs[i + 1 :]:
                    w = adj.get(b)
                    if w:
                        total += w
        return total


@dataclass(frozen=True)
class ObjectiveTerm:
    """One same-disk pair's contribution to the objective."""

    pair: Pair
    weight: float
    cost: float

    @property
    def contribution(self) -> float:
        return self.weight * self.cost


@dataclass(frozen=True)
class ObjectiveReport:
    value: float
    terms: tuple[ObjectiveTerm, ...]


def _ordered_positions(
    alloc: Allocation, files: Iterable[int], sizes: Mapping[int, int]
) -> dict[int, float]:
    """Track midpoint of each file under the allocation's disk orderings."""
    if alloc.ordering is None:
        raise ValidationError("ordered-distance costs need a track ordering")
    needed = set(files)
    positions: dict[int, float] = {}
    seen: set[int] = set()
    for disk in sorted(alloc.ordering):
        offset = 0
        for f in alloc.ordering[disk]:
            if f in seen:
                raise ValidationError(f"file {f} is ordered on more than one disk")
            seen.add(f)
            if f not in sizes:
                raise ValidationError(f"ordered file {f} has no size")
            if f in needed and alloc.assignment.get(f) != disk:
                raise ValidationError(
                    f"file {f} is ordered on disk {disk} but assigned to "
                    f"disk {alloc.assignment.get(f)}"
                )
            positions[f] = offset + sizes[f] / 2.0
            offset += sizes[f]
    missing = needed - set(positions)
    if missing:
        raise ValidationError(
            f"track ordering is missing active files: {sorted(missing)}"
        )
    return positions


def evaluate_objective(
    alloc: Allocation,
    stage: Stage,
    model: CostModel = CostModel.UNIFORM,
    sizes: Optional[Mapping[int, int]] = None,
) -> ObjectiveReport:
    """Head-movement objective of an allocation at one stage.

    The assignment must cover the stage's active files; entries for other
    files are ignored. Under the uniform cost model each same-disk related
    pair costs its weight; under the ordered-distance model the cost of a
    pair is the distance between the two files' track midpoints, which
    requires the allocation to carry an ordering and ``sizes`` to be given.
    """
    model = CostModel(model)
    active = stage.active_set
    missing = active - set(alloc.assignment)
    if missing:
        raise ValidationError(f"assignment is missing active files: {sorted(missing)}")

    weights = PairWeights(stage)
    positions: Optional[dict[int, float]] = None
    if model is CostModel.ORDERED_DISTANCE:
        if sizes is None:
            raise ValidationError("ordered-distance costs need file sizes")
        positions = _ordered_positions(alloc, active, sizes)

    terms: list[ObjectiveTerm] = []
    for (a, b), w in weights.pairs():
        if alloc.assignment[a] != alloc.assignment[b]:
            continue
        if model is CostModel.UNIFORM:
            cost = 1.0
        else:
            cost = abs(positions[a] - positions[b])
        terms.append(ObjectiveTerm((a, b), w, cost))
    value = sum(t.contribution for t in terms)
    return ObjectiveReport(value=value, terms=tuple(terms))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[str, ...]


def check_allocation_feasible(
    alloc: Allocation, stage: Stage, instance: Instance
) -> FeasibilityReport:
    """Capacity and coverage check of an allocation at one stage."""
    violations: list[str] = []
    sizes = instance.sizes
    capacities = instance.capacities

    for f in stage.active_files:
        if f not in alloc.assignment:
            violations.append(f"active file {f} is not assigned to any disk")
    for f, d in alloc.assignment.items():
        if f not in sizes:
            violations.append(f"assigned file {f} does not exist")
        if d not in capacities:
            violations.append(f"file {f} is assigned to unknown disk {d}")

    loads: dict[int, int] = {}
    for f, d in alloc.assignment.items():
        if f in sizes and d in capacities:
            loads[d] = loads.get(d, 0) + sizes[f]
    for d in sorted(loads):
        if loads[d] > capacities[d]:
            violations.append(
                f"disk {d} holds {loads[d]} tracks, capacity is {capacities[d]}"
            )

    if alloc.ordering is not None:
        seen: set[int] = set()
        for d in sorted(alloc.ordering):
            if d not in capacities:
                violations.append(f"track ordering names unknown disk {d}")
                continue
            for f in alloc.ordering[d]:
                if f in seen:
                    violations.append(f"file {f} is ordered on more than one disk")
                seen.add(f)
                if alloc.assignment.get(f) != d:
                    violations.append(
                        f"file {f} is ordered on disk {d} but assigned to "
                        f"disk {alloc.assignment.get(f)}"
                    )

    return FeasibilityReport(feasible=not violations, violations=tuple(violations))


def _pinned_loads(
    pinned: Mapping[int, int], sizes: Mapping[int, int], capacities: Mapping[int, int]
) -> dict[int, int]:
    loads = {d: 0 for d in capacities}
    for f, d in pinned.items():
        if d not in capacities:
            raise ValidationError(f"pinned file {f} sits on unknown disk {d}")
        if f not in sizes:
            raise ValidationError(f"pinned file {f} does not exist")
        loads[d] += sizes[f]
    for d, used in loads.items():
        if used > capacities[d]:
            raise InfeasibleError(
                f"pinned files overfill disk {d}: {used} tracks of {capacities[d]}"
            )
    return loads


def _resolve_pinned(
    stage: Stage,
    previous: Optional[Allocation],
    pinned: Optional[Mapping[int, int]],
) -> dict[int, int]:
    """Files that must keep a fixed disk while this stage is solved.

    Explicit ``pinned`` wins; otherwise every file of ``previous`` that is
    not active in this stage stays where it was.
    """
    if pinned is not None:
        return {int(f): int(d) for f, d in pinned.items()}
    if previous is None:
        return {}
    active = stage.active_set
    return {f: d for f, d in previous.assignment.items() if f not in active}


def spread_allocate(
    communities: Sequence[Community],
    instance: Instance,
    stage: Stage,
    previous: Optional[Allocation] = None,
    *,
    pinned: Optional[Mapping[int, int]] = None,
) -> Allocation:
    """Place each community's files on pairwise distinct disks.

    Communities are handled in the given order, members ascending; each
    member goes to the disk with the most residual capacity among those it
    fits that the community has not used yet (ties to the lowest disk id).
    When no unused disk fits, the distinct-disk rule is dropped for that
    member and the result is flagged degraded. Raises InfeasibleError only
    when some member fits no disk at all.
    """
    sizes = instance.sizes
    capacities = instance.capacities
    fixed = _resolve_pinned(stage, previous, pinned)
    loads = _pinned_loads(fixed, sizes, capacities)

    assignment: dict[int, int] = dict(fixed)
    degraded = False
    disks = sorted(capacities)

    for community in communities:
        used: set[int] = set()
        for f in community.members:
            if f in assignment:
                raise ValidationError(f"file {f} is already placed")
            size = sizes.get(f)
            if size is None:
                raise ValidationError(f"file {f} does not exist")

            fits = [d for d in disks if d not in used and loads[d] + size <= capacities[d]]
            if not fits:
                fits = [d for d in disks if loads[d] + size <= capacities[d]]
                if not fits:
                    raise InfeasibleError(
                        f"file {f} ({size} tracks) fits on no disk"
                    )
                degraded = True
            best = max(fits, key=lambda d: (capacities[d] - loads[d], -d))
            assignment[f] = best
            loads[best] += size
            used.add(best)

    return Allocation(assignment, degraded=degraded)


def local_search(
    alloc: Allocation,
    stage: Stage,
    instance: Instance,
    model: CostModel = CostModel.UNIFORM,
    *,
    pinned: Optional[Mapping[int, int]] = None,
) -> tuple[Allocation, float]:
    """First-improvement descent over single-file moves and pair swaps.

    Only the stage's active files move; any other assigned file acts as a
    capacity-consuming fixture. Scanning order is file ascending then disk
    ascending for moves, pair-lexicographic for swaps, restarting after
    every accepted step, so the result is deterministic. Evaluation count
    is capped at 10 n^2; hitting the cap logs a warning and returns the
    best allocation found.
    """
    model = CostModel(model)
    if model is not CostModel.UNIFORM:
        raise ValidationError(
            "local search only optimizes uniform costs; ordered-distance is "
            "evaluation-only"
        )
    report = check_allocation_feasible(alloc, stage, instance)
    if not report.feasible:
        raise InfeasibleError("; ".join(report.violations))

    sizes = instance.sizes
    capacities = instance.capacities
    weights = PairWeights(stage)

    if pinned is not None:
        movable = sorted(set(stage.active_files) - set(pinned))
    else:
        movable = sorted(set(stage.active_files) & set(alloc.assignment))
    assignment = dict(alloc.assignment)
    disks = sorted(capacities)

    loads = {d: 0 for d in disks}
    for f, d in assignment.items():
        loads[d] += sizes[f]
    on_disk: dict[int, set[int]] = {d: set() for d in disks}
    for f in movable:
        on_disk[assignment[f]].add(f)
    # Non-movable assigned files still interfere with movable ones.
    fixed_on_disk: dict[int, set[int]] = {d: set() for d in disks}
    for f, d in assignment.items():
        if f in stage.active_set and f not in on_disk[d]:
            fixed_on_disk[d].add(f)

    def neighbours_on(f: int, d: int) -> float:
        return weights.attach_cost(f, on_disk[d] | fixed_on_disk[d])

    n = len(movable)
    psi = weights.psi(
        {d: sorted(on_disk[d] | fixed_on_disk[d]) for d in disks}
    )
    cap = _LOCAL_SEARCH_EVAL_FACTOR * n * n
    evals = 0
    capped = False

    improved = True
    while improved and not capped:
        improved = False
        # Single-file moves.
        for f in movable:
            src = assignment[f]
            detach = neighbours_on(f, src)
            for dst in disks:
                if dst == src:
                    continue
                if loads[dst] + sizes[f] > capacities[dst]:
                    continue
                evals += 1
                delta = neighbours_on(f, dst) - detach
                if delta < 0:
                    assignment[f] = dst
                    on_disk[src].discard(f)
                    on_disk[dst].add(f)
                    loads[src] -= sizes[f]
                    loads[dst] += sizes[f]
                    psi += delta
                    improved = True
                    break
                if evals >= cap:
                    capped = True
                    break
            if improved or capped:
                break
        if improved or capped:
            continue
        # Pair swaps.
        for a, b in combinations(movable, 2):
            da, db = assignment[a], assignment[b]
            if da == db:
                continue
            if loads[da] - sizes[a] + sizes[b] > capacities[da]:
                continue
            if loads[db] - sizes[b] + sizes[a] > capacities[db]:
                continue
            evals += 1
            w_ab = weights.weight(a, b)
            delta = (
                neighbours_on(a, db)
                - w_ab
                + neighbours_on(b, da)
                - w_ab
                - neighbours_on(a, da)
                - neighbours_on(b, db)
            )
            if delta < 0:
                assignment[a], assignment[b] = db, da
                on_disk[da].discard(a)
                on_disk[db].add(a)
                on_disk[db].discard(b)
                on_disk[da].add(b)
                loads[da] += sizes[b] - sizes[a]
                loads[db] += sizes[a] - sizes[b]
                psi += delta
                improved = True
                break
            if evals >= cap:
                capped = True
                break

    if capped:
        log.warning(
            "local search stopped at the evaluation cap (%d evaluations)", cap
        )
    result = Allocation(assignment, degraded=alloc.degraded)
    return result, psi


def exact_solve(
    stage: Stage,
    instance: Instance,
    model: CostModel = CostModel.UNIFORM,
    *,
    cap: int = EXACT_CAP_DEFAULT,
    pinned: Optional[Mapping[int, int]] = None,
) -> tuple[Allocation, float]:
    """Provably minimal placement by depth-first enumeration.

    Searches files ascending over disks ascending, pruning on capacity, on
    partial objective once an incumbent exists, and on symmetry between
    empty disks of equal residual capacity. Among minimum-objective
    placements it returns the lexicographically least assignment vector.
    Raises EnumerationCapError beyond ``cap`` active files.
    """
    model = CostModel(model)
    if model is not CostModel.UNIFORM:
        raise ValidationError(
            "exact search only optimizes uniform costs; ordered-distance is "
            "evaluation-only"
        )
    sizes = instance.sizes
    capacities = instance.capacities
    fixed = _resolve_pinned(stage, None, pinned)
    loads = _pinned_loads(fixed, sizes, capacities)

    files = [f for f in stage.active_files if f not in fixed]
    n = len(files)
    if n > cap:
        raise EnumerationCapError(
            f"exact search over {n} files exceeds the cap of {cap}; "
            "raise the cap explicitly or use the heuristic path"
        )
    weights = PairWeights(stage)
    disks = sorted(capacities)

    if n == 0:
        alloc = Allocation(dict(fixed))
        by_disk: dict[int, list[int]] = {}
        for f, d in fixed.items():
            if f in stage.active_set:
                by_disk.setdefault(d, []).append(f)
        return alloc, weights.psi(by_disk)

    # Interference of pinned active files among themselves is a constant
    # floor; interference with searched files accrues during the descent.
    active_fixed: dict[int, list[int]] = {d: [] for d in disks}
    for f, d in fixed.items():
        if f in stage.active_set:
            active_fixed[d].append(f)
    base_psi = weights.psi(active_fixed)

    best_assignment: Optional[list[int]] = None
    best_psi = float("inf")
    chosen: list[int] = []
    on_disk: dict[int, list[int]] = {d: list(active_fixed[d]) for d in disks}
    pinned_disks = set(fixed.values())

    def descend(i: int, partial: float) -> None:
        nonlocal best_assignment, best_psi
        if best_assignment is not None and partial >= best_psi:
            return
        if i == n:
            best_assignment = chosen.copy()
            best_psi = partial
            return
        f = files[i]
        size = sizes[f]
        seen_empty: set[int] = set()
        for d in disks:
            if loads[d] + size > capacities[d]:
                continue
            # Empty unpinned disks of equal residual capacity are
            # interchangeable until something lands on them.
            if not on_disk[d] and d not in pinned_disks:
                key = capacities[d] - loads[d]
                if key in seen_empty:
                    continue
                seen_empty.add(key)
            step = weights.attach_cost(f, on_disk[d])
            loads[d] += size
            on_disk[d].append(f)
            chosen.append(d)
            descend(i + 1, partial + step)
            chosen.pop()
            on_disk[d].pop()
            loads[d] -= size

    descend(0, base_psi)
    if best_assignment is None:
        raise InfeasibleError("no placement satisfies the disk capacities")

    assignment = dict(fixed)
    assignment.update(zip(files, best_assignment))
    return Allocation(assignment), best_psi


def solve_stage(
    instance: Instance,
    stage_index: int,
    *,
    exact: Optional[bool] = None,
    cap: int = EXACT_CAP_DEFAULT,
    previous: Optional[Allocation] = None,
    pinned: Optional[Mapping[int, int]] = None,
) -> tuple[Allocation, float, bool]:
    """One-stop single-stage solve: (allocation, objective, certified).

    ``exact=True`` forces enumeration (EnumerationCapError above the cap),
    ``exact=False`` forces the spreading heuristic plus local search, and
    None tries enumeration first, falling back when the stage is too wide.
    """
    stage = instance.stage(stage_index)
    fixed = _resolve_pinned(stage, previous, pinned)
    if exact is None:
        try:
            alloc, psi = exact_solve(stage, instance, cap=cap, pinned=fixed)
            return alloc, psi, True
        except EnumerationCapError:
            pass
    elif exact:
        alloc, psi = exact_solve(stage, instance, cap=cap, pinned=fixed)
        return alloc, psi, True

    relation = integrate_relations(stage)
    free = [f for f in stage.active_files if f not in fixed]
    communities = detect_communities(relation, free, instance.gamma)
    seeded = spread_allocate(communities, instance, stage, pinned=fixed)
    alloc, psi = local_search(seeded, stage, instance, pinned=fixed)
    return alloc, psi, False
