"""
Why rounding the relaxation is not a solver
===========================================

Relax the binaries to [0, 1], solve the LP, round at 0.5: on easy
instances this lands on a feasible (if mediocre) portfolio. Once
projects are shared between options, the rounded point routinely
violates the link rows that tie an option to its supporting projects.

The branch-and-bound search never has that problem: every incumbent it
reports satisfies all rows exactly. Shared pools do make the bound
weak, so this demo stops at a 5% optimality certificate (and a short
time cap) instead of full closure.
"""

from optfolio.datagen import GenParams, Sukp, generate_instance
from optfolio import build_model, expand, round_continuous, solve, solve_lp_relaxation
from optfolio.solver import SolveOptions

print(f"{'seed':>4} {'relax':>7} {'rounded':>8} {'feasible':>9} "
      f"{'search':>7}  status")
broken = 0
for seed in range(8):
    inst = generate_instance(GenParams(
        n_projects=8, seed=seed, n_start_years=3, budget_fraction=0.7,
        structure=Sukp(share_prob=0.5)))
    model = build_model(inst, expand(inst))

    relax = solve_lp_relaxation(model)
    _, rounded_value, feasible, bad = round_continuous(model, relax.x)
    res = solve(model, SolveOptions(gap_tolerance=0.05, time_limit=6.0))
    broken += not feasible
    print(f"{seed:>4} {relax.objective:>7.3f} {rounded_value:>8.3f} "
          f"{str(feasible):>9} {res.primal_bound:>7.3f}  {res.status}")
    if not feasible and seed < 2:
        # The first violated rows tell the story: options kept by the
        # rounding whose supporting projects were rounded away.
        print(f"     violated: {', '.join(bad[:3])}")

print(f"\ninfeasible roundings: {broken}/8")
print("every search row is a fully funded portfolio; the rounded column")
print("only is when its flag says so.")
