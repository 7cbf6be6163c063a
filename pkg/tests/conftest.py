"""Shared fixtures: a small hand-checkable instance.

The toy has two families over six projects, covering the interesting
mechanics in the smallest space: a mandated movable project (P1), a
fixed project with a leading zero-cost year (P2), a divestment
returning funds (P3), a degenerate one-year window (P5), and a shared
project (P2 sits in both F1.1 and F2.1). Optimal value is 0.9 via
F1.1 + F2.1; hand-checked against the budget year by year.
"""

import dataclasses

import pytest

from optfolio.model import (BudgetLine, CapabilityOption, Family,
                            PortfolioInstance, Project)


def toy_instance() -> PortfolioInstance:
    families = (
        Family("F1", frozenset({"F1.0", "F1.1"})),
        Family("F2", frozenset({"F2.0", "F2.1", "F2.2"})),
    )
    options = (
        CapabilityOption("F1.0", "F1", frozenset(), {1: 0.0}),
        CapabilityOption("F1.1", "F1", frozenset({"P1", "P2"}), {1: 0.4}),
        CapabilityOption("F2.0", "F2", frozenset(), {1: 0.0}),
        CapabilityOption("F2.1", "F2", frozenset({"P2", "P3", "P4"}), {1: 0.5}),
        CapabilityOption("F2.2", "F2", frozenset({"P5", "P6"}), {1: 0.3}),
    )
    projects = (
        Project("P1", "P1", "P1", True, False, 1, 1, 3, (3000, 2300)),
        Project("P2", "P2", "P2", False, True, 2, 1, 4, (0, 1500)),
        Project("P3", "P3", "P3", False, True, 1, 1, 1, (-660, -1000)),
        Project("P4", "P4", "P4", False, True, 1, 1, 1, (1200, 800)),
        Project("P5", "P5", "P5", False, False, 2, 2, 2, (900,)),
        Project("P6", "P6", "P6", False, True, 3, 2, 4, (500, 500)),
    )
    budget = tuple(BudgetLine(y, 6000, 8000, 2000) for y in range(1, 6))
    return PortfolioInstance(families=families, options=options,
                             projects=projects, budget=budget, label="toy")


@pytest.fixture
def toy() -> PortfolioInstance:
    return toy_instance()


def with_changes(instance: PortfolioInstance, *, disable=(), mandate_options=(),
                 mandate_families=(), mandate_projects=()) -> PortfolioInstance:
    """Copy of an instance with directive flags flipped on."""
    options = tuple(
        dataclasses.replace(o,
                            disabled=o.disabled or o.option_key in disable,
                            mandated=o.mandated or o.option_key in mandate_options)
        for o in instance.options)
    families = tuple(
        dataclasses.replace(f, mandated=f.mandated or f.family_key in mandate_families)
        for f in instance.families)
    projects = tuple(
        dataclasses.replace(p, mandated=p.mandated or p.project_id in mandate_projects)
        for p in instance.projects)
    return dataclasses.replace(instance, options=options, families=families,
                               projects=projects)
