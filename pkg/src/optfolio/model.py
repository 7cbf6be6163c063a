"""Domain types and validation for investment-portfolio design.

The data model is a three-level hierarchy. A *family* groups the
alternative ways of delivering one capability. Each alternative is a
*capability option* bundling a set of *projects*; options within a
family are mutually exclusive, and every family carries a zero-value
baseline option so "do nothing" is always on the table. Projects may
be shared between options, may offer variants (at most one variant of
a project is ever scheduled), and may move within a start-year window
unless fixed in time.

Currency is held as integer thousands throughout, which keeps budget
arithmetic exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property


@dataclass(frozen=True)
class Project:
    """One schedulable variant of a project.

    Attributes
    ----------
    variant_key : str
        Unique identifier of this variant.
    project_id : str
        Identifier shared by all variants of the same underlying
        project; single-variant projects usually reuse the variant key.
    name : str
        Display name.
    mandated : bool
        Whether some variant of this project must be funded.
    fixed_in_time : bool
        If true the only admissible start year is ``preferred_start``.
    preferred_start, earliest_start, latest_start : int
        Calendar years bounding the start window.
    cost_profile : tuple[int, ...]
        Signed yearly spend for each year of the project's life,
        starting at the start year. Negative amounts are divestments
        returning funds.
    """

    variant_key: str
    project_id: str
    name: str
    mandated: bool
    fixed_in_time: bool
    preferred_start: int
    earliest_start: int
    latest_start: int
    cost_profile: tuple[int, ...]

    def admissible_starts(self) -> range:
        if self.fixed_in_time:
            return range(self.preferred_start, self.preferred_start + 1)
        return range(self.earliest_start, self.latest_start + 1)

    def is_divestment(self) -> bool:
        return bool(self.cost_profile) and all(c < 0 for c in self.cost_profile)


@dataclass(frozen=True)
class CapabilityOption:
    """A bundle of projects delivering one capability level.

    ``value_schedule`` maps the year the option becomes effective to
    its value score; a single entry acts as a constant (lookups fall
    back to the nearest earlier assessed year). An option with no
    project references is a baseline and must be worth 0 everywhere.
    """

    option_key: str
    family_key: str
    project_refs: frozenset[str]
    value_schedule: dict[int, float]
    mandated: bool = False
    disabled: bool = False

    def is_baseline(self) -> bool:
        return not self.project_refs

    def value_at(self, year: int) -> float:
        """Value at an effective year: exact entry, else the nearest
        earlier assessed year, else 0."""
        if year in self.value_schedule:
            return self.value_schedule[year]
        earlier = [y for y in self.value_schedule if y < year]
        if earlier:
            return self.value_schedule[max(earlier)]
        return 0.0


@dataclass(frozen=True)
class Family:
    family_key: str
    option_keys: frozenset[str]
    mandated: bool = False


@dataclass(frozen=True)
class BudgetLine:
    """Yearly budget with asymmetric programming slack.

    Spend in ``year`` must stay within
    ``[budget - under_slack, budget + over_slack]``.
    """

    year: int
    budget: int
    under_slack: int = 0
    over_slack: int = 0


@dataclass(frozen=True)
class Violation:
    """One broken data rule, naming the offending key."""

    code: str
    key: str
    message: str


@dataclass(frozen=True)
class PortfolioInstance:
    """A complete, self-contained portfolio-design problem."""

    families: tuple[Family, ...]
    options: tuple[CapabilityOption, ...]
    projects: tuple[Project, ...]
    budget: tuple[BudgetLine, ...]
    label: str = ""

    @cached_property
    def project_by_variant(self) -> dict[str, Project]:
        return {p.variant_key: p for p in self.projects}

    @cached_property
    def option_by_key(self) -> dict[str, CapabilityOption]:
        return {o.option_key: o for o in self.options}

    @cached_property
    def family_by_key(self) -> dict[str, Family]:
        return {f.family_key: f for f in self.families}

    def options_of_family(self, family_key: str) -> tuple[CapabilityOption, ...]:
        fam = self.family_by_key[family_key]
        return tuple(o for o in self.options if o.option_key in fam.option_keys)

    def horizon(self) -> tuple[int, int]:
        """First and last budgeted year."""
        years = [b.year for b in self.budget]
        return (min(years), max(years)) if years else (0, -1)


def _check_projects(instance: PortfolioInstance, out: list[Violation]) -> None:
    seen: set[str] = set()
    for p in instance.projects:
        if p.variant_key in seen:
            out.append(Violation("duplicate-key", p.variant_key,
                                 f"variant_key {p.variant_key!r} defined more than once"))
        seen.add(p.variant_key)
        if not (p.earliest_start <= p.preferred_start <= p.latest_start):
            out.append(Violation("window-order", p.variant_key,
                                 f"start window must order earliest <= preferred <= latest, got "
                                 f"{p.earliest_start}/{p.preferred_start}/{p.latest_start}"))
        if not p.cost_profile:
            out.append(Violation("empty-profile", p.variant_key,
                                 "cost_profile must have at least one year"))
        if p.is_divestment() and not p.fixed_in_time:
            out.append(Violation("divestment-not-fixed", p.variant_key,
                                 "divestment projects are fixed in time by construction"))


def _check_options(instance: PortfolioInstance, out: list[Violation]) -> None:
    known_projects = {p.variant_key for p in instance.projects}
    seen: set[str] = set()
    for o in instance.options:
        if o.option_key in seen:
            out.append(Violation("duplicate-key", o.option_key,
                                 f"option_key {o.option_key!r} defined more than once"))
        seen.add(o.option_key)
        if o.is_baseline() and any(v != 0 for v in o.value_schedule.values()):
            out.append(Violation("baseline-value", o.option_key,
                                 "baseline options (no projects) must be worth 0"))
        if o.mandated and o.disabled:
            out.append(Violation("mandate-disabled", o.option_key,
                                 "an option cannot be both mandated and disabled"))
        for ref in sorted(o.project_refs):
            if ref not in known_projects:
                out.append(Violation("unknown-project-ref", o.option_key,
                                     f"option references unknown project {ref!r}"))
        if any(v < 0 for v in o.value_schedule.values()):
            out.append(Violation("negative-value", o.option_key,
                                 "option values must be nonnegative"))


def _check_families(instance: PortfolioInstance, out: list[Violation]) -> None:
    owners: dict[str, str] = {}
    seen: set[str] = set()
    for f in instance.families:
        if f.family_key in seen:
            out.append(Violation("duplicate-key", f.family_key,
                                 f"family_key {f.family_key!r} defined more than once"))
        seen.add(f.family_key)
        if not f.option_keys:
            out.append(Violation("empty-family", f.family_key,
                                 "family has no options"))
            continue
        has_baseline = False
        for key in sorted(f.option_keys):
            if key in owners:
                out.append(Violation("multi-family-option", key,
                                     f"option listed by families {owners[key]!r} and {f.family_key!r}"))
            owners[key] = f.family_key
            opt = instance.option_by_key.get(key)
            if opt is None:
                out.append(Violation("unknown-option-ref", f.family_key,
                                     f"family references unknown option {key!r}"))
                continue
            if opt.family_key != f.family_key:
                out.append(Violation("family-mismatch", key,
                                     f"option claims family {opt.family_key!r} but is listed by {f.family_key!r}"))
            if opt.is_baseline():
                has_baseline = True
        if not has_baseline:
            out.append(Violation("no-baseline", f.family_key,
                                 "family must contain a baseline option"))
    for o in instance.options:
        if o.option_key not in owners:
            out.append(Violation("orphan-option", o.option_key,
                                 "option is listed by no family"))


def _check_variants(instance: PortfolioInstance, out: list[Violation]) -> None:
    variants: dict[str, list[str]] = {}
    for p in instance.projects:
        variants.setdefault(p.project_id, []).append(p.variant_key)
    family_of_option = {}
    for f in instance.families:
        for k in f.option_keys:
            family_of_option[k] = f.family_key
    for project_id, keys in variants.items():
        if len(keys) < 2:
            continue
        fams = set()
        for o in instance.options:
            if any(k in o.project_refs for k in keys) and o.option_key in family_of_option:
                fams.add(family_of_option[o.option_key])
        if len(fams) > 1:
            out.append(Violation("variant-family", project_id,
                                 f"project {project_id!r} has variants but appears in families "
                                 + ", ".join(sorted(fams))))


def _check_budget(instance: PortfolioInstance, out: list[Violation]) -> None:
    if not instance.budget:
        out.append(Violation("empty-budget", instance.label or "instance",
                             "at least one budget line is required"))
        return
    years = [b.year for b in instance.budget]
    if sorted(years) != list(range(min(years), max(years) + 1)):
        out.append(Violation("budget-gap", str(min(years)),
                             "budget years must form a contiguous horizon"))
    seen: set[int] = set()
    for b in instance.budget:
        if b.year in seen:
            out.append(Violation("duplicate-key", str(b.year),
                                 f"budget year {b.year} defined more than once"))
        seen.add(b.year)
        if b.under_slack < 0 or b.over_slack < 0:
            out.append(Violation("negative-slack", str(b.year),
                                 "budget slack must be nonnegative"))
    first, last = instance.horizon()
    for p in instance.projects:
        if not p.cost_profile:
            continue
        span_end = p.latest_start + len(p.cost_profile) - 1
        if p.earliest_start < first or span_end > last:
            out.append(Violation("horizon-coverage", p.variant_key,
                                 f"project years {p.earliest_start}..{span_end} exceed the "
                                 f"budgeted horizon {first}..{last}"))


def validate(instance: PortfolioInstance) -> list[Violation]:
    """Check every data rule; an empty list means the instance is sound.

    Violations are data, not failures: callers decide whether to stop.
    The result is deterministic for a given instance.
    """
    out: list[Violation] = []
    _check_projects(instance, out)
    _check_options(instance, out)
    _check_families(instance, out)
    _check_variants(instance, out)
    _check_budget(instance, out)
    return out
