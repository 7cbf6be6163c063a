"""
LP text export and round-trip parsing
=====================================

The assembled binary program serializes to CPLEX-style LP text, which
external solvers and diff tools read directly. Parsing the text back
reconstructs an equivalent model: same variables, same rows, same
coefficients, independent of formatting.
"""

import importlib.util
import pathlib

from optfolio import build_model, expand, lp_text, models_equivalent, parse_lp_text

spec = importlib.util.spec_from_file_location(
    "demo01", pathlib.Path(__file__).with_name("01_build_and_solve.py"))
demo01 = importlib.util.module_from_spec(spec)
spec.loader.exec_module(demo01)

model = build_model(demo01.instance, expand(demo01.instance))
text = lp_text(model)

# The head of the file: objective terms are option values; project
# variables carry explicit zero weight so every column is declared.
print("\n".join(text.splitlines()[:14]))
print("...")

recovered = parse_lp_text(text)
print("\nround trip equivalent:", models_equivalent(recovered, model))
print("variables:", len(model.variables), "rows:", len(model.constraints))

# A taste of the row structure: the link row for one option says "if
# you buy the option, you fund all its projects".
row = next(r for r in model.constraints if r.label.startswith("proj-opt-F1.1"))
terms = " + ".join(f"{c:g} {v}" for v, c in sorted(row.terms.items()))
print(f"\n{row.label}:  {terms} {row.relation} {row.rhs:g}")
