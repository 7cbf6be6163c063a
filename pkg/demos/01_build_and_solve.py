"""
Building a portfolio and solving it exactly
===========================================

A two-family workshop portfolio, written out by hand: each family
offers a do-nothing baseline plus real capability options, options
bundle projects, and one project is shared between families. The
solver picks one option per family, schedules movable projects, and
respects the yearly budget envelope.
"""

from optfolio import (BudgetLine, CapabilityOption, Family,
                      PortfolioInstance, Project, SolveOptions,
                      build_model, expand, solve, source_key, validate)

# Projects carry a cost profile per year of execution. P1 may start in
# years 1..3; P2 is fixed to start in year 2 and its first year is
# free (a planning year). P3 is a divestment: it returns money.
projects = (
    Project("P1", "P1", "Sensor upgrade", True, False, 1, 1, 3, (3000, 2300)),
    Project("P2", "P2", "Shared datalink", False, True, 2, 1, 4, (0, 1500)),
    Project("P3", "P3", "Legacy sell-off", False, True, 1, 1, 1, (-660, -1000)),
    Project("P4", "P4", "Radar refresh", False, True, 1, 1, 1, (1200, 800)),
    Project("P5", "P5", "Trainer fleet", False, False, 2, 2, 2, (900,)),
    Project("P6", "P6", "Sim facility", False, True, 3, 2, 4, (500, 500)),
)

# Options deliver value once their last project has finished. The
# value schedule maps effective years to scores; later delivery can be
# worth less. P2 appears in both F1.1 and F2.1: funding it once serves
# both (the set-union economics).
options = (
    CapabilityOption("F1.0", "F1", frozenset(), {1: 0.0}),
    CapabilityOption("F1.1", "F1", frozenset({"P1", "P2"}), {1: 0.4}),
    CapabilityOption("F2.0", "F2", frozenset(), {1: 0.0}),
    CapabilityOption("F2.1", "F2", frozenset({"P2", "P3", "P4"}), {1: 0.5}),
    CapabilityOption("F2.2", "F2", frozenset({"P5", "P6"}), {1: 0.3}),
)
families = (
    Family("F1", frozenset({"F1.0", "F1.1"})),
    Family("F2", frozenset({"F2.0", "F2.1", "F2.2"})),
)

# Budget of 6000 a year with generous slack below and 2000 above.
budget = tuple(BudgetLine(y, 6000, 8000, 2000) for y in range(1, 6))

instance = PortfolioInstance(families=families, options=options,
                             projects=projects, budget=budget, label="demo")
assert validate(instance) == []

# Expansion turns movable projects into one pseudo-project per start
# year and options into one pseudo-option per start combination.
expansion = expand(instance)
print(f"projects {len(projects)} -> pseudo-projects {len(expansion.pseudo_projects)}")
print(f"options  {len(options)} -> pseudo-options  {len(expansion.pseudo_options)}")

model = build_model(instance, expansion)
result = solve(model, SolveOptions(gap_tolerance=0.0))

print(f"\nstatus {result.status}, value {result.primal_bound}, "
      f"nodes {result.nodes_explored}")
chosen = sorted(source_key(name) for name, v in result.incumbent.items()
                if v >= 0.5)
print("chosen (pseudo keys):", ", ".join(chosen))

# Spend per year for the chosen schedule, against the envelope.
spend = {}
by_key = {pp.pseudo_key: pp for pp in expansion.pseudo_projects}
for name, v in result.incumbent.items():
    pp = by_key.get(source_key(name))
    if pp is not None and v >= 0.5:
        for year, cost in pp.yearly_cost.items():
            spend[year] = spend.get(year, 0) + cost
print("\nyear  spend  ceiling")
for line in budget:
    print(f"{line.year:>4} {spend.get(line.year, 0):>6} {line.budget + line.over_slack:>8}")
