"""Brute-force reference solver, independent of the package internals.

Everything is recomputed from the raw instance: admissible starts,
placement costs, effective years, values. The only contracts shared
with the library are the naming scheme for pseudo keys and the
canonical order in which chosen option values are summed (family
order, then option order, then start-combination order). The order
matters because test comparisons are exact float equality.

Only valid, conflict-free instances belong here; directive conflicts
(mandated plus disabled and friends) are builder errors, not search
problems, and this module does not reproduce them.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from optfolio.model import (BudgetLine, CapabilityOption, Family,
                            PortfolioInstance, Project)


@dataclass(frozen=True)
class Choice:
    """One way a family can act: a concrete option start-combination."""

    ordinal: int                 # canonical position across the instance
    option_key: str
    pseudo_key: str              # "<option>.<index>"
    placements: tuple[tuple[str, int], ...]   # (variant, start), refs sorted
    project_keys: frozenset[str]              # pseudo-project keys
    value: float


@dataclass
class OracleResult:
    status: str                                  # "optimal" | "infeasible"
    value: float | None
    selections: list[tuple[frozenset, frozenset]]   # optimal (options, projects)
    n_feasible: int
    all_feasible: list[tuple[frozenset, frozenset]] = field(default_factory=list)


def _placement_key(project: Project, start: int) -> str:
    offset = start - list(project.admissible_starts())[0]
    return project.variant_key if offset == 0 else f"{project.variant_key}.{offset}"


def _family_choices(instance: PortfolioInstance) -> tuple[list[list[Choice | None]], int]:
    """Per-family candidate lists in canonical order, plus total count."""
    ordinal = 0
    per_family: list[list[Choice | None]] = []
    for family in instance.families:
        opts = instance.options_of_family(family.family_key)
        mandated = [o for o in opts if o.mandated]
        choices: list[Choice | None] = []
        if not family.mandated and not mandated:
            choices.append(None)
        for option in opts:
            usable = not option.disabled and (not mandated or option in mandated)
            refs = sorted(option.project_refs)
            pools = [list(instance.project_by_variant[r].admissible_starts()) for r in refs]
            for index, starts in enumerate(itertools.product(*pools)):
                if usable:
                    placements = tuple(zip(refs, starts))
                    ready = [s + len(instance.project_by_variant[r].cost_profile)
                             for r, s in placements]
                    effective = max(ready) if ready else instance.horizon()[0]
                    choices.append(Choice(
                        ordinal=ordinal,
                        option_key=option.option_key,
                        pseudo_key=f"{option.option_key}.{index}",
                        placements=placements,
                        project_keys=frozenset(
                            _placement_key(instance.project_by_variant[r], s)
                            for r, s in placements),
                        value=option.value_at(effective)))
                ordinal += 1
        per_family.append(choices)
    return per_family, ordinal


def _budget_row_years(instance: PortfolioInstance) -> set[int]:
    """Years whose budget line gets a row: some placement can spend there."""
    years: set[int] = set()
    for p in instance.projects:
        for start in p.admissible_starts():
            for k, cost in enumerate(p.cost_profile):
                if cost != 0:
                    years.add(start + k)
    return {b.year for b in instance.budget if b.year in years}


def _suppressed_mandates(instance: PortfolioInstance) -> set[str]:
    """Mandated project_ids with no enabled option containing any variant."""
    variants: dict[str, set[str]] = {}
    for p in instance.projects:
        variants.setdefault(p.project_id, set()).add(p.variant_key)
    out = set()
    for pid, vs in variants.items():
        if not any(instance.project_by_variant[v].mandated for v in vs):
            continue
        if not any(not o.disabled and (o.project_refs & vs) for o in instance.options):
            out.add(pid)
    return out


def oracle_solve(instance: PortfolioInstance, limit: int = 500_000,
                 collect_all: bool = False) -> OracleResult:
    """Enumerate every family combination and keep the best feasible."""
    per_family, _ = _family_choices(instance)
    total = 1
    for choices in per_family:
        total *= max(len(choices), 1)
    if total > limit:
        raise ValueError(f"search space {total} exceeds oracle limit {limit}")

    mandated_pids = {p.project_id for p in instance.projects if p.mandated}
    mandated_pids -= _suppressed_mandates(instance)
    row_years = _budget_row_years(instance)
    budget_by_year = {b.year: b for b in instance.budget}
    project_of_variant = instance.project_by_variant

    best_value: float | None = None
    best: list[tuple[frozenset, frozenset]] = []
    n_feasible = 0
    all_feasible: list[tuple[frozenset, frozenset]] = []

    for combo in itertools.product(*per_family):
        chosen = [c for c in combo if c is not None]
        starts: dict[str, int] = {}
        ok = True
        for c in chosen:
            for variant, start in c.placements:
                if starts.setdefault(variant, start) != start:
                    ok = False       # one variant, two different starts
                    break
            if not ok:
                break
        if not ok:
            continue
        pids: set[str] = set()
        for variant in starts:
            pid = project_of_variant[variant].project_id
            if pid in pids:
                ok = False           # two variants of one project funded
                break
            pids.add(pid)
        if not ok or not mandated_pids <= pids:
            continue
        for year in row_years:
            spend = 0
            for variant, start in starts.items():
                profile = project_of_variant[variant].cost_profile
                k = year - start
                if 0 <= k < len(profile):
                    spend += profile[k]
            line = budget_by_year[year]
            if not (line.budget - line.under_slack <= spend <= line.budget + line.over_slack):
                ok = False
                break
        if not ok:
            continue

        n_feasible += 1
        value = 0.0
        for c in sorted(chosen, key=lambda c: c.ordinal):
            value += c.value
        selection = (frozenset(c.pseudo_key for c in chosen),
                     frozenset(k for c in chosen for k in c.project_keys))
        if collect_all:
            all_feasible.append(selection)
        if best_value is None or value > best_value:
            best_value, best = value, [selection]
        elif value == best_value:
            best.append(selection)

    if best_value is None:
        return OracleResult("infeasible", None, [], 0, all_feasible)
    return OracleResult("optimal", best_value, best, n_feasible, all_feasible)


# ---------------------------------------------------------------------------
# Random small instances for oracle sweeps. Valid by construction and
# kept tiny so exhaustive enumeration stays cheap.


def random_instance(rng: random.Random, tag: str = "rand") -> PortfolioInstance:
    n_fam = rng.randint(2, 4)
    n_proj = rng.randint(max(2, n_fam - 1), 6)

    projects: list[Project] = []
    variant_twin: str | None = None
    for i in range(n_proj):
        key = f"R{i + 1}"
        divest = rng.random() < 0.12
        length = rng.randint(1, 3)
        if divest:
            profile = tuple(-rng.randint(100, 900) for _ in range(length))
        else:
            profile = tuple(rng.choice([0, rng.randint(100, 1500)]) for _ in range(length))
            if all(c == 0 for c in profile):
                profile = profile[:-1] + (rng.randint(100, 1500),)
        fixed = divest or rng.random() < 0.5
        earliest = rng.randint(1, 2)
        latest = earliest if fixed and rng.random() < 0.5 else earliest + rng.randint(0, 2)
        preferred = rng.randint(earliest, latest)
        projects.append(Project(key, key, key, rng.random() < 0.15, fixed,
                                preferred, earliest, latest, profile))
    if rng.random() < 0.25:
        # A variant twin of one project; confined to one family below.
        base = projects[rng.randrange(len(projects))]
        twin = Project(base.variant_key + "B", base.project_id,
                       base.name + "B", base.mandated, True,
                       base.preferred_start, base.preferred_start,
                       base.preferred_start,
                       tuple(c + 50 for c in base.cost_profile))
        projects.append(twin)
        variant_twin = twin.variant_key

    # Deal variants to families; the twin pair must stay together.
    pool = [p.variant_key for p in projects]
    rng.shuffle(pool)
    if variant_twin is not None:
        base_key = variant_twin[:-1]
        pool.remove(variant_twin)
        pool.insert(pool.index(base_key) + 1, variant_twin)
    shares = [pool[i::n_fam] for i in range(n_fam)]
    if variant_twin is not None:
        for share in shares:
            if variant_twin in share and base_key not in share:
                share.remove(variant_twin)
                next(s for s in shares if base_key in s).append(variant_twin)

    # Projects without variants may be shared across families; that is
    # the set-union structure the whole model exists for.
    twin_pair = {variant_twin, variant_twin[:-1]} if variant_twin else set()
    shareable = [p.variant_key for p in projects if p.variant_key not in twin_pair]

    families: list[Family] = []
    options: list[CapabilityOption] = []
    for fi in range(n_fam):
        fam_key = f"G{fi + 1}"
        keys = [f"{fam_key}.0"]
        options.append(CapabilityOption(keys[0], fam_key, frozenset(), {1: 0.0}))
        local = list(shares[fi])
        n_real = rng.randint(1, 2) if local else 0
        for oi in range(n_real):
            ok = f"{fam_key}.{oi + 1}"
            if variant_twin in local and rng.random() < 0.7:
                refs = {variant_twin if rng.random() < 0.5 else variant_twin[:-1]}
            else:
                refs = set(rng.sample(local, min(len(local), rng.randint(1, 2))))
                if shareable and rng.random() < 0.35:
                    refs.add(rng.choice(shareable))
            schedule = {1: rng.uniform(0.1, 1.0)}
            if rng.random() < 0.3:
                schedule[rng.randint(2, 4)] = rng.uniform(0.1, 1.0)
            options.append(CapabilityOption(ok, fam_key, frozenset(refs), schedule,
                                            mandated=rng.random() < 0.12,
                                            disabled=rng.random() < 0.10))
            keys.append(ok)
        families.append(Family(fam_key, frozenset(keys), mandated=rng.random() < 0.10))

    # Repair directive conflicts instead of rejecting: at most one
    # mandate per family, never mandated+disabled, mandated families
    # keep one enabled option.
    fixed_opts: list[CapabilityOption] = []
    for fam in families:
        fam_opts = [o for o in options if o.family_key == fam.family_key]
        seen_mandate = False
        for o in fam_opts:
            mand, dis = o.mandated, o.disabled
            if mand and dis:
                dis = False
            if mand and seen_mandate:
                mand = False
            seen_mandate = seen_mandate or mand
            fixed_opts.append(CapabilityOption(o.option_key, o.family_key,
                                               o.project_refs, o.value_schedule,
                                               mandated=mand, disabled=dis))
    options = fixed_opts
    for i, fam in enumerate(families):
        fam_opts = [o for o in options if o.family_key == fam.family_key]
        if fam.mandated and all(o.disabled for o in fam_opts):
            keep = rng.choice(fam_opts)
            options[options.index(keep)] = CapabilityOption(
                keep.option_key, keep.family_key, keep.project_refs,
                keep.value_schedule, mandated=keep.mandated, disabled=False)

    # Drop projects no option references; the builder treats them as
    # orphans by design.
    referenced = {r for o in options for r in o.project_refs}
    projects = [p for p in projects if p.variant_key in referenced]
    if not projects:
        p = Project("R1", "R1", "R1", False, True, 1, 1, 1, (500,))
        projects = [p]
        filler = next(o for o in options if not o.is_baseline())
        options[options.index(filler)] = CapabilityOption(
            filler.option_key, filler.family_key, frozenset({"R1"}),
            filler.value_schedule, filler.mandated, filler.disabled)

    last = max(p.latest_start + len(p.cost_profile) - 1 for p in projects)
    # A per-year tightness coin would leave nearly every multi-year
    # instance with some unreachable floor. Tighten year 1 only, and
    # only for a minority of instances, so sweeps see both outcomes.
    tight = rng.random() < 0.3
    budget = tuple(BudgetLine(y, rng.randint(800, 4000),
                              rng.choice([0, 600]) if tight and y == 1 else 20000,
                              rng.randint(0, 1500))
                   for y in range(1, last + 1))
    return PortfolioInstance(tuple(families), tuple(options), tuple(projects),
                             budget, label=f"{tag}")
