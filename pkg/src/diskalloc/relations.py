"""Integrated file relations, communities, and file condensation.

A stage's precedence arcs and concurrency edges merge into one undirected
"integrated" relation; files linked by it want to sit on different disks.
Connected components of that relation are the communities the spreading
allocator works from. Components wider than the disk count are split by
repeatedly peeling low-degree members into sub-communities that fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import ValidationError
from .model import Pair, Stage, canonical_edge


@dataclass(frozen=True)
class IntegratedRelation:
    """Symmetric, irreflexive relation over a stage's active files."""

    edges: frozenset[Pair]

    def __post_init__(self):
        object.__setattr__(
            self, "edges", frozenset(canonical_edge(a, b) for a, b in self.edges)
        )

    def has_edge(self, a: int, b: int) -> bool:
        return canonical_edge(a, b) in self.edges

    def adjacency(self, files: Iterable[int]) -> dict[int, frozenset[int]]:
        """Neighbour sets restricted to ``files``."""
        members = set(files)
        out: dict[int, set[int]] = {f: set() for f in members}
        for a, b in self.edges:
            if a in members and b in members:
                out[a].add(b)
                out[b].add(a)
        return {f: frozenset(ns) for f, ns in sorted(out.items())}


def integrate_relations(stage: Stage) -> IntegratedRelation:
    """Merge a stage's precedence and concurrency into one undirected relation.

    Stages carrying an explicit override use it verbatim instead.
    """
    if stage.e3_override is not None:
        return IntegratedRelation(stage.e3_override)
    edges = {canonical_edge(a, b) for a, b in stage.precedence}
    edges.update(stage.concurrency)
    return IntegratedRelation(frozenset(edges))


@dataclass(frozen=True)
class Community:
    """A group of mutually related files, kept apart by the allocator."""

    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(sorted({int(f) for f in self.members}))
        if not members:
            raise ValidationError("a community needs at least one member")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)


def _components(adjacency: Mapping[int, frozenset[int]]) -> list[tuple[int, ...]]:
    """Connected components, each sorted, ordered by smallest member."""
    seen: set[int] = set()
    comps: list[tuple[int, ...]] = []
    for start in sorted(adjacency):
        if start in seen:
            continue
        stack = [start]
        comp = []
        seen.add(start)
        while stack:
            f = stack.pop()
            comp.append(f)
            for g in sorted(adjacency[f], reverse=True):
                if g not in seen:
                    seen.add(g)
                    stack.append(g)
        comps.append(tuple(sorted(comp)))
    return comps


def _peel(component: tuple[int, ...], adjacency: Mapping[int, frozenset[int]], limit: int) -> list[tuple[int, ...]]:
    """Split one oversized component into pieces of at most ``limit`` members.

    Greedy peeling: seed a piece with the lowest-degree member (ties by id),
    grow it by the lowest-degree neighbour of the piece so far, and once the
    piece reaches the limit recurse on the components the remainder falls
    apart into. Keeps tightly linked files together as long as they fit.
    """
    if len(component) <= limit:
        return [component]
    members = set(component)
    degree = {f: len(adjacency[f] & members) for f in component}

    seed = min(component, key=lambda f: (degree[f], f))
    piece = [seed]
    in_piece = {seed}
    while len(piece) < limit:
        frontier = set()
        for f in piece:
            frontier.update(adjacency[f] & members - in_piece)
        if not frontier:
            break
        nxt = min(frontier, key=lambda f: (degree[f], f))
        piece.append(nxt)
        in_piece.add(nxt)

    rest = members - in_piece
    pieces = [tuple(sorted(piece))]
    if rest:
        sub_adj = {f: adjacency[f] & rest for f in rest}
        for comp in _components(sub_adj):
            pieces.extend(_peel(comp, adjacency, limit))
    return pieces


def split_oversized_component(
    component: tuple[int, ...], relation: IntegratedRelation, gamma: int
) -> list[Community]:
    """Break a component into communities no wider than the disk count."""
    if gamma < 1:
        raise ValidationError("need at least one disk to split against")
    component = tuple(sorted({int(f) for f in component}))
    adjacency = relation.adjacency(component)
    pieces = _peel(component, adjacency, gamma)
    return [Community(p) for p in sorted(pieces)]


def detect_communities(
    relation: IntegratedRelation, active: Iterable[int], gamma: int
) -> list[Community]:
    """Communities of the active files: components, split down to size gamma.

    Isolated files form singleton communities. The result is ordered by
    smallest member, which fixes the allocator's processing order.
    """
    if gamma < 1:
        raise ValidationError("need at least one disk to detect communities against")
    active = sorted({int(f) for f in active})
    adjacency = relation.adjacency(active)
    out: list[Community] = []
    for comp in _components(adjacency):
        out.extend(split_oversized_component(comp, relation, gamma))
    return sorted(out, key=lambda c: c.members)


@dataclass(frozen=True)
class Condensation:
    """Result of merging related files into representative super-files.

    ``stage`` is the rewritten stage over representatives. ``groups`` maps
    each representative that absorbed other files to the sorted tuple of
    original members; untouched files carry no entry. ``sizes`` gives the
    size of every file the rewritten stage mentions.
    """

    stage: Stage
    groups: Mapping[int, tuple[int, ...]]
    sizes: Mapping[int, int]

    def originals(self, rep: int) -> tuple[int, ...]:
        return self.groups.get(rep, (rep,))


def condense_files(stage: Stage, sizes: Mapping[int, int], threshold: int) -> Condensation:
    """Repeatedly merge the cheapest related file pair that fits the threshold.

    Candidate pairs are edges of the integrated relation whose combined size
    stays within ``threshold`` tracks; the merge picked is the one with the
    smallest (combined size, low id, high id). The surviving representative
    is the smaller id. Relations and movement probabilities are relabelled
    onto representatives (probability rows and columns add up; the diagonal
    is dropped). Stops when no candidate remains.
    """
    if threshold < 1:
        raise ValidationError("condensation threshold must be positive")

    cur_sizes = {int(f): int(sizes[f]) for f in stage.active_files}
    groups: dict[int, list[int]] = {f: [f] for f in cur_sizes}
    precedence = set(stage.precedence)
    concurrency = set(stage.concurrency)
    override = set(stage.e3_override) if stage.e3_override is not None else None
    phi = dict(stage.phi) if stage.phi is not None else None

    def integrated_edges() -> set[Pair]:
        if override is not None:
            return set(override)
        edges = {canonical_edge(a, b) for a, b in precedence}
        edges.update(concurrency)
        return edges

    def relabel(x: int, rep: int, gone: int) -> int:
        return rep if x == gone else x

    while True:
        candidates = [
            (cur_sizes[a] + cur_sizes[b], a, b)
            for a, b in integrated_edges()
            if cur_sizes[a] + cur_sizes[b] <= threshold
        ]
        if not candidates:
            break
        _, a, b = min(candidates)
        rep, gone = (a, b) if a < b else (b, a)

        groups[rep] = sorted(groups[rep] + groups.pop(gone))
        cur_sizes[rep] = cur_sizes[rep] + cur_sizes.pop(gone)

        precedence = {
            (relabel(x, rep, gone), relabel(y, rep, gone))
            for x, y in precedence
            if relabel(x, rep, gone) != relabel(y, rep, gone)
        }
        concurrency = {
            canonical_edge(relabel(x, rep, gone), relabel(y, rep, gone))
            for x, y in concurrency
            if relabel(x, rep, gone) != relabel(y, rep, gone)
        }
        if override is not None:
            override = {
                canonical_edge(relabel(x, rep, gone), relabel(y, rep, gone))
                for x, y in override
                if relabel(x, rep, gone) != relabel(y, rep, gone)
            }
        if phi is not None:
            merged: dict[Pair, float] = {}
            for (x, y), w in phi.items():
                x2, y2 = relabel(x, rep, gone), relabel(y, rep, gone)
                if x2 == y2:
                    continue
                merged[(x2, y2)] = merged.get((x2, y2), 0.0) + w
            phi = merged

    new_stage = Stage(
        index=stage.index,
        active_files=tuple(sorted(cur_sizes)),
        precedence=frozenset(precedence),
        concurrency=frozenset(concurrency),
        phi=phi,
        e3_override=frozenset(override) if override is not None else None,
    )
    return Condensation(
        stage=new_stage,
        groups={f: tuple(g) for f, g in sorted(groups.items()) if len(g) > 1},
        sizes=dict(sorted(cur_sizes.items())),
    )


def expand_allocation(alloc: "Allocation", cond: Condensation) -> "Allocation":
    """Map an allocation of representatives back onto the original files.

    Every original member of a merged group lands on its representative's
    disk, so merged files always co-locate. A track ordering, if present,
    expands each representative in place to its members ascending.
    """
    from .model import Allocation

    assignment: dict[int, int] = {}
    for rep, disk in alloc.assignment.items():
        for f in cond.originals(rep):
            assignment[f] = disk
    ordering = None
    if alloc.ordering is not None:
        ordering = {
            d: tuple(f for rep in seq for f in cond.originals(rep))
            for d, seq in alloc.ordering.items()
        }
    return Allocation(assignment, ordering=ordering, degraded=alloc.degraded)
