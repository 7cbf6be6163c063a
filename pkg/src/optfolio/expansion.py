"""Expansion of scheduling freedom into pure selection.

A project that may start anywhere in its window becomes one
*pseudo-project* per admissible start year, each carrying the cost
profile shifted to that start. An option over such projects becomes
one *pseudo-option* per combination of start choices (the Cartesian
product of its projects' pseudo-project sets). After expansion the
optimizer only picks among pseudo-things; time has been compiled away.

Naming follows the dotted scheme of the input tables: project ``P1``
with a three-year window expands to ``P1``, ``P1.1``, ``P1.2``; option
``F1.1`` over it expands to ``F1.1.0``, ``F1.1.1``, ``F1.1.2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .model import PortfolioInstance

DEFAULT_OPTION_CAP = 10_000


class ExpansionError(Exception):
    pass


class HorizonOverflowError(ExpansionError):
    pass


class CombinatorialLimitError(ExpansionError):
    pass


@dataclass(frozen=True)
class PseudoProject:
    """A project pinned to one concrete start year.

    ``yearly_cost`` maps each year of the placement to its signed
    spend; years inside the placement keep explicit zeros so its
    length always equals the source profile length (the effective-year
    rule depends on that).
    """

    pseudo_key: str
    source_variant: str
    start_year: int
    yearly_cost: dict[int, int]

    def cost_in(self, year: int) -> int:
        return self.yearly_cost.get(year, 0)


@dataclass(frozen=True)
class PseudoOption:
    """An option pinned to one start-year combination.

    ``assignment`` maps each referenced variant_key to the chosen
    pseudo-project. ``value`` is the source value schedule evaluated
    at ``effective_year``.
    """

    pseudo_key: str
    source_option: str
    assignment: dict[str, PseudoProject]
    effective_year: int
    value: float
    last_effective_project: str | None


def shift_profile(profile: tuple[int, ...], start_year: int,
                  horizon: tuple[int, int]) -> dict[int, int]:
    """Place a cost profile at a start year inside the horizon.

    Returns the year → spend mapping (years outside the placement are
    implicitly zero). The total is preserved by construction. Raises
    :class:`HorizonOverflowError` if the placement exits the horizon.
    """
    first, last = horizon
    end_year = start_year + len(profile) - 1
    if start_year < first or end_year > last:
        raise HorizonOverflowError(
            f"placement {start_year}..{end_year} exits horizon {first}..{last}")
    return {start_year + k: c for k, c in enumerate(profile)}


def expand_projects(instance: PortfolioInstance) -> tuple[PseudoProject, ...]:
    """One pseudo-project per admissible start year of each project.

    Fixed-in-time projects yield exactly one; a window of width w
    yields w, keyed ``P``, ``P.1``, … ``P.(w-1)`` by offset from the
    earliest start.
    """
    horizon = instance.horizon()
    out: list[PseudoProject] = []
    seen: set[str] = set()
    for p in instance.projects:
        starts = list(p.admissible_starts())
        for offset, start in enumerate(starts):
            key = p.variant_key if offset == 0 else f"{p.variant_key}.{offset}"
            if key in seen:
                raise ExpansionError(f"pseudo-project key collision on {key!r}")
            seen.add(key)
            out.append(PseudoProject(
                pseudo_key=key, source_variant=p.variant_key, start_year=start,
                yearly_cost=shift_profile(p.cost_profile, start, horizon)))
    return tuple(out)


def find_epoch(assignment: dict[str, PseudoProject],
               first_horizon_year: int) -> tuple[int, str | None]:
    """Year an option becomes effective, and the project that gates it.

    A project is ready the year after its spending ends (start year +
    profile length); the option is ready when its last project is.
    Baselines (empty assignment) are effective from the first horizon
    year and gate on nothing.
    """
    if not assignment:
        return first_horizon_year, None
    best_year, best_variant = None, None
    for variant in sorted(assignment):
        pp = assignment[variant]
        ready = pp.start_year + len(pp.yearly_cost)
        if best_year is None or ready > best_year:
            best_year, best_variant = ready, variant
    return best_year, best_variant


def expand_options(instance: PortfolioInstance,
                   pseudo_projects: tuple[PseudoProject, ...],
                   option_cap: int = DEFAULT_OPTION_CAP) -> tuple[PseudoOption, ...]:
    """Cartesian expansion of every option over its projects' starts.

    Pseudo-options are keyed ``<option>.<index>`` in deterministic
    order (project refs sorted, starts ascending). Raises
    :class:`CombinatorialLimitError` when one option would exceed
    ``option_cap`` combinations.
    """
    by_variant: dict[str, list[PseudoProject]] = {}
    for pp in pseudo_projects:
        by_variant.setdefault(pp.source_variant, []).append(pp)
    first_year = instance.horizon()[0]

    out: list[PseudoOption] = []
    seen: set[str] = set()
    for family in instance.families:
        for option in instance.options:
            if option.option_key not in family.option_keys:
                continue
            refs = sorted(option.project_refs)
            count = 1
            for ref in refs:
                count *= len(by_variant[ref])
            if count > option_cap:
                raise CombinatorialLimitError(
                    f"option {option.option_key!r} expands to {count} pseudo-options, "
                    f"cap is {option_cap}")
            pools = [by_variant[ref] for ref in refs]
            for index, combo in enumerate(itertools.product(*pools)):
                key = f"{option.option_key}.{index}"
                if key in seen:
                    raise ExpansionError(f"pseudo-option key collision on {key!r}")
                seen.add(key)
                assignment = dict(zip(refs, combo))
                effective, last = find_epoch(assignment, first_year)
                out.append(PseudoOption(
                    pseudo_key=key, source_option=option.option_key,
                    assignment=assignment, effective_year=effective,
                    value=option.value_at(effective),
                    last_effective_project=last))
    return tuple(out)


@dataclass(frozen=True)
class Expansion:
    """The full pseudo universe of one instance."""

    pseudo_projects: tuple[PseudoProject, ...]
    pseudo_options: tuple[PseudoOption, ...]

    @cached_property
    def options_by_source(self) -> dict[str, tuple[PseudoOption, ...]]:
        grouped: dict[str, list[PseudoOption]] = {}
        for po in self.pseudo_options:
            grouped.setdefault(po.source_option, []).append(po)
        return {k: tuple(v) for k, v in grouped.items()}

    @cached_property
    def projects_by_variant(self) -> dict[str, tuple[PseudoProject, ...]]:
        grouped: dict[str, list[PseudoProject]] = {}
        for pp in self.pseudo_projects:
            grouped.setdefault(pp.source_variant, []).append(pp)
        return {k: tuple(v) for k, v in grouped.items()}


def expand(instance: PortfolioInstance,
           option_cap: int = DEFAULT_OPTION_CAP) -> Expansion:
    pseudo_projects = expand_projects(instance)
    pseudo_options = expand_options(instance, pseudo_projects, option_cap)
    return Expansion(pseudo_projects=pseudo_projects, pseudo_options=pseudo_options)
