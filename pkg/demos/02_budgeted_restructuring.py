"""Repair a stage-1 allocation for stage 2 under relocation budgets.

The stage-1 optimum puts files 1 and 4 on one disk; stage 2 relates them,
so keeping the old layout costs 1.0. Every disk is full, so single moves
are impossible and the cheapest repair is a two-file swap. The budget
controls how much of that repair we can afford.
"""

from diskalloc import (
    RestructureMode,
    RestructuringProblem,
    exact_solve,
    load_paper_example,
    restructure_one_stage,
)
from diskalloc.report import allocation_lines

instance = load_paper_example()
previous, _ = exact_solve(instance.stage(1), instance)

print("stage 1 layout carried into stage 2:")
print("\n".join(allocation_lines(previous.assignment, instance)))
print()

for budget in (0.0, 1.0, 2.0):
    problem = RestructuringProblem(
        instance=instance,
        stage=instance.stage(2),
        previous=previous,
        budget=budget,
    )
    result = restructure_one_stage(problem)
    print(
        f"budget {budget}: objective {result.objective}, "
        f"rho {result.proximity}, moves {len(result.plan.moves)}"
    )
    for move in result.plan.moves:
        print(f"  file {move.file}: disk {move.src} -> disk {move.dst}")

print()

# Greedy mode applies the best single improvement repeatedly. It finds a
# different two-move swap with the same objective.
greedy = restructure_one_stage(
    RestructuringProblem(
        instance=instance, stage=instance.stage(2), previous=previous, budget=2.0
    ),
    RestructureMode.GREEDY,
)
print("greedy repair moves:", [(m.file, m.src, m.dst) for m in greedy.plan.moves])
print("greedy objective:", greedy.objective)

assert greedy.objective == 0.0
