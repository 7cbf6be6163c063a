"""
What-if edits: mandating and disabling options
==============================================

Workshop facilitators steer the optimizer by mandating options that
must appear and disabling options that are off the table. Both are
flags on the instance; the solver sees them as equality rows. Re-solve
after each edit and watch the portfolio re-arrange.
"""

import dataclasses

from optfolio import SolveOptions, build_model, expand, solve, source_key

import importlib.util
import pathlib

# The demo portfolio from 01, reused verbatim.
spec = importlib.util.spec_from_file_location(
    "demo01", pathlib.Path(__file__).with_name("01_build_and_solve.py"))
demo01 = importlib.util.module_from_spec(spec)
spec.loader.exec_module(demo01)
base = demo01.instance


def solve_and_report(instance, headline):
    model = build_model(instance, expand(instance))
    res = solve(model, SolveOptions())
    picked = sorted({source_key(n).rsplit(".", 1)[0]
                     for n, v in res.incumbent.items()
                     if v >= 0.5 and dict(model.variables)[n] == "option"})
    print(f"{headline:<34} value {res.primal_bound:<5} options {picked}")
    return res


def with_option_flag(instance, key, **flags):
    options = tuple(dataclasses.replace(o, **flags) if o.option_key == key else o
                    for o in instance.options)
    return dataclasses.replace(instance, options=options)


print()
solve_and_report(base, "baseline")

# Mandating F2.2 forces the cheaper training option in even though
# F2.1 scores higher; the family rule then locks F2.1 out.
mandated = with_option_flag(base, "F2.2", mandated=True)
solve_and_report(mandated, "mandate F2.2")

# Disabling F2.1 removes it from the model entirely; its equality row
# pins the choice variable to zero.
disabled = with_option_flag(base, "F2.1", disabled=True)
solve_and_report(disabled, "disable F2.1")

# Both edits at once agree with either edit alone here: the optimum is
# F1.1 + F2.2 in each case.
both = with_option_flag(disabled, "F2.2", mandated=True)
solve_and_report(both, "disable F2.1 + mandate F2.2")
