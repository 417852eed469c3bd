"""Shrink a generated instance by condensation, then solve it exactly.

The exhaustive solver refuses stages with more than twelve free files.
Condensation merges related small files into single units until the stage
fits, at the price of keeping each merged group on one disk. The merged
pairs' own interference is paid up front; everything else is still
optimized exactly, and the expanded allocation is evaluated against the
original stage, including under the ordered head-distance model.
"""

from diskalloc import (
    Allocation,
    CostModel,
    DiskSpec,
    EnumerationCapError,
    FileSpec,
    Instance,
    condense_files,
    evaluate_objective,
    exact_solve,
    expand_allocation,
    generate_instance,
    parse_instance_document,
    validate_instance,
)
from diskalloc.report import allocation_lines

doc = generate_instance(
    n_files=14,
    gamma=3,
    n_stages=1,
    edge_density=0.25,
    size_range=(1, 2),
    capacity_slack=1.7,
    seed=21,
)
instance = parse_instance_document(doc)
stage = instance.stage(1)

try:
    exact_solve(stage, instance)
except EnumerationCapError as exc:
    print("direct exact solve refused:", exc)
print()

cond = condense_files(stage, instance.sizes, threshold=3)
print("merged groups (representative <- members):")
for rep, members in sorted(cond.groups.items()):
    print(f"  {rep} <- {members}")
print("files before:", len(stage.active_files), "after:", len(cond.stage.active_files))
print()

condensed_instance = validate_instance(
    Instance(
        files=tuple(FileSpec(f, s) for f, s in sorted(cond.sizes.items())),
        disks=tuple(DiskSpec(d.id, d.capacity) for d in instance.disks),
        stages=(cond.stage,),
    )
)
best, condensed_psi = exact_solve(cond.stage, condensed_instance)
print("condensed objective (merged-pair interference not counted):", condensed_psi)

expanded = expand_allocation(best, cond)
print("\n".join(allocation_lines(expanded.assignment, instance)))
full = evaluate_objective(expanded, stage)
print("objective on the original stage:", full.value)
for term in full.terms:
    print(f"  pair {term.pair}: {term.contribution}")
print()

# The same allocation under the ordered model: files laid out ascending on
# each disk, cost growing with the track distance between related files.
ordering = {d: tuple(expanded.files_on(d)) for d in sorted(instance.capacities)}
ordered = Allocation(expanded.assignment, ordering=ordering)
distance = evaluate_objective(
    ordered, stage, CostModel.ORDERED_DISTANCE, sizes=instance.sizes
)
print("ordered head-distance objective:", distance.value)

assert condensed_psi <= full.value
