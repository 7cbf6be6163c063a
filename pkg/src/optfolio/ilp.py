"""Binary program assembly over pseudo-options and pseudo-projects.

The portfolio problem becomes: maximize the summed value of chosen
pseudo-options subject to

* one option per family (mandated families: exactly one),
* yearly spend within the budget envelope,
* each project scheduled at most once across variants and starts
  (mandated projects: exactly once),
* a chosen option pulls in all of its projects, and a project can be
  funded only in service of some chosen option that contains it.

Project variables never appear in the objective; they only mediate
shared costs. Disabled options stay in the model as zero-forced rows
so variable indexing is stable under what-if toggling.

Models export to CPLEX-style LP text and parse back for interop.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

from .expansion import Expansion
from .model import PortfolioInstance

LE, GE, EQ = "<=", ">=", "="

_KEY_RE = re.compile(r"^[A-Za-z0-9_.]+$")
_VAR_PREFIX = "Choose_"


class BuildError(Exception):
    pass


class ConflictError(BuildError):
    """Mandates that can never be satisfied together."""


@dataclass(frozen=True)
class ConstraintRow:
    """One linear row: terms relation rhs, e.g. ``x + y <= 1``.

    Labels are deterministic ``<kind>-<key>`` strings so golden-file
    tests and infeasibility reports can name rows.
    """

    label: str
    terms: dict[str, float]
    relation: str
    rhs: float


@dataclass(frozen=True)
class IlpModel:
    """An immutable binary maximization problem."""

    variables: tuple[tuple[str, str], ...]   # (name, "option" | "project")
    objective: dict[str, float]
    constraints: tuple[ConstraintRow, ...]
    sense: str = "maximize"

    @cached_property
    def row_by_label(self) -> dict[str, ConstraintRow]:
        return {row.label: row for row in self.constraints}

    def option_variables(self) -> list[str]:
        return [name for name, kind in self.variables if kind == "option"]


def variable_name(pseudo_key: str) -> str:
    """LP-safe decision-variable name for a pseudo key."""
    if not _KEY_RE.match(pseudo_key):
        raise BuildError(f"key {pseudo_key!r} is not LP-safe "
                         "(allowed: letters, digits, underscore, dot)")
    return _VAR_PREFIX + pseudo_key


def source_key(variable: str) -> str:
    """Inverse of :func:`variable_name`."""
    if not variable.startswith(_VAR_PREFIX):
        raise ValueError(f"not a decision variable name: {variable!r}")
    return variable[len(_VAR_PREFIX):]


def _check_conflicts(instance: PortfolioInstance) -> None:
    for o in instance.options:
        if o.mandated and o.disabled:
            raise ConflictError(f"option {o.option_key!r} is both mandated and disabled")
    for f in instance.families:
        opts = instance.options_of_family(f.family_key)
        mandated = [o.option_key for o in opts if o.mandated]
        if len(mandated) > 1:
            raise ConflictError(f"family {f.family_key!r} mandates more than one option: "
                                + ", ".join(mandated))
        if f.mandated and all(o.disabled for o in opts):
            raise ConflictError(f"family {f.family_key!r} is mandated but every option "
                                "is disabled")


def add_family_constraints(instance: PortfolioInstance,
                           expansion: Expansion) -> list[ConstraintRow]:
    """At most one pseudo-option per family; exactly one if mandated."""
    rows = []
    for f in instance.families:
        terms: dict[str, float] = {}
        for o in instance.options_of_family(f.family_key):
            for po in expansion.options_by_source.get(o.option_key, ()):
                terms[variable_name(po.pseudo_key)] = 1.0
        rows.append(ConstraintRow(label=f"family-{f.family_key}", terms=terms,
                                  relation=EQ if f.mandated else LE, rhs=1.0))
    return rows


def add_budget_constraints(instance: PortfolioInstance,
                           expansion: Expansion) -> list[ConstraintRow]:
    """Per budgeted year: spend within [budget - under, budget + over].

    Zero coefficients are omitted; a year no placement can touch
    yields empty rows, which are dropped. Divestment (negative)
    coefficients participate as-is, ceiling and floor alike.
    """
    rows = []
    for line in sorted(instance.budget, key=lambda b: b.year):
        terms: dict[str, float] = {}
        for pp in expansion.pseudo_projects:
            cost = pp.cost_in(line.year)
            if cost != 0:
                terms[variable_name(pp.pseudo_key)] = float(cost)
        if not terms:
            continue
        rows.append(ConstraintRow(label=f"budget-hi-{line.year}", terms=dict(terms),
                                  relation=LE, rhs=float(line.budget + line.over_slack)))
        rows.append(ConstraintRow(label=f"budget-lo-{line.year}", terms=dict(terms),
                                  relation=GE, rhs=float(line.budget - line.under_slack)))
    return rows


def _project_groups(instance: PortfolioInstance) -> list[tuple[str, list[str]]]:
    order: list[str] = []
    groups: dict[str, list[str]] = {}
    for p in instance.projects:
        if p.project_id not in groups:
            order.append(p.project_id)
            groups[p.project_id] = []
        groups[p.project_id].append(p.variant_key)
    return [(pid, groups[pid]) for pid in order]


def _has_enabled_container(instance: PortfolioInstance, variants: list[str]) -> bool:
    vs = set(variants)
    return any(not o.disabled and (o.project_refs & vs) for o in instance.options)


def add_schedule_constraints(instance: PortfolioInstance,
                             expansion: Expansion) -> list[ConstraintRow]:
    """One row per project_id: all variants and starts sum to <= 1."""
    rows = []
    for project_id, variants in _project_groups(instance):
        terms: dict[str, float] = {}
        for v in variants:
            for pp in expansion.projects_by_variant.get(v, ()):
                terms[variable_name(pp.pseudo_key)] = 1.0
        rows.append(ConstraintRow(label=f"schedule-{project_id}", terms=terms,
                                  relation=LE, rhs=1.0))
    return rows


def add_project_option_links(instance: PortfolioInstance,
                             expansion: Expansion) -> list[ConstraintRow]:
    """Choosing a pseudo-option forces every project placement in it."""
    rows = []
    for po in expansion.pseudo_options:
        if not po.assignment:
            continue
        terms = {variable_name(pp.pseudo_key): 1.0 for pp in po.assignment.values()}
        terms[variable_name(po.pseudo_key)] = -float(len(po.assignment))
        rows.append(ConstraintRow(label=f"proj-opt-{po.pseudo_key}", terms=terms,
                                  relation=GE, rhs=0.0))
    return rows


def add_option_project_links(instance: PortfolioInstance,
                             expansion: Expansion) -> list[ConstraintRow]:
    """A project placement needs some chosen pseudo-option containing it."""
    containers: dict[str, list[str]] = {pp.pseudo_key: [] for pp in expansion.pseudo_projects}
    for po in expansion.pseudo_options:
        for pp in po.assignment.values():
            containers[pp.pseudo_key].append(po.pseudo_key)
    rows = []
    for pp in expansion.pseudo_projects:
        inside = containers[pp.pseudo_key]
        if not inside:
            raise BuildError(f"pseudo-project {pp.pseudo_key!r} is contained in no option")
        terms = {variable_name(k): 1.0 for k in inside}
        terms[variable_name(pp.pseudo_key)] = -1.0
        rows.append(ConstraintRow(label=f"opt-proj-{pp.pseudo_key}", terms=terms,
                                  relation=GE, rhs=0.0))
    return rows


def add_mandates(instance: PortfolioInstance, expansion: Expansion,
                 schedule_rows: list[ConstraintRow]) -> list[ConstraintRow]:
    """Equality overwrites for mandated projects, plus option locks.

    Mandated project_ids turn their schedule row into ``= 1``
    (relabeled ``mandate-proj-…``). Mandated options force the sum of
    their pseudo-options to 1, disabled options to 0. A mandated
    project whose every containing option is disabled stays at
    ``<= 1``: the disable directive wins, and the link rows already
    force it unfunded, so an equality would just poison the model.
    """
    _check_conflicts(instance)
    mandated_ids = {p.project_id for p in instance.projects if p.mandated}
    by_label = {row.label: i for i, row in enumerate(schedule_rows)}
    for project_id, variants in _project_groups(instance):
        if project_id not in mandated_ids:
            continue
        if not _has_enabled_container(instance, variants):
            continue
        i = by_label[f"schedule-{project_id}"]
        old = schedule_rows[i]
        schedule_rows[i] = ConstraintRow(label=f"mandate-proj-{project_id}",
                                         terms=old.terms, relation=EQ, rhs=1.0)

    rows = []
    for o in instance.options:
        if not (o.mandated or o.disabled):
            continue
        terms = {variable_name(po.pseudo_key): 1.0
                 for po in expansion.options_by_source.get(o.option_key, ())}
        rows.append(ConstraintRow(label=f"mandate-opt-{o.option_key}", terms=terms,
                                  relation=EQ, rhs=0.0 if o.disabled else 1.0))
    return rows


def build_model(instance: PortfolioInstance, expansion: Expansion) -> IlpModel:
    """Assemble the full binary program for an expanded instance."""
    variables = [(variable_name(po.pseudo_key), "option") for po in expansion.pseudo_options]
    variables += [(variable_name(pp.pseudo_key), "project") for pp in expansion.pseudo_projects]
    if len({name for name, _ in variables}) != len(variables):
        raise BuildError("pseudo keys collide after variable naming")

    objective = {variable_name(po.pseudo_key): float(po.value)
                 for po in expansion.pseudo_options}
    objective.update({variable_name(pp.pseudo_key): 0.0
                      for pp in expansion.pseudo_projects})

    schedule_rows = add_schedule_constraints(instance, expansion)
    mandate_rows = add_mandates(instance, expansion, schedule_rows)
    constraints = (add_family_constraints(instance, expansion)
                   + add_budget_constraints(instance, expansion)
                   + schedule_rows
                   + add_project_option_links(instance, expansion)
                   + add_option_project_links(instance, expansion)
                   + mandate_rows)
    return IlpModel(variables=tuple(variables), objective=objective,
                    constraints=tuple(constraints))


# ---------------------------------------------------------------------------
# LP text format


def _fmt_num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _fmt_terms(terms: dict[str, float], var_index: dict[str, int]) -> str:
    ordered = sorted(terms, key=var_index.__getitem__)
    parts = []
    for name in ordered:
        c = terms[name]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign}{_fmt_num(abs(c))} {name}")
    return " ".join(parts)


def lp_text(model: IlpModel) -> str:
    """Render the model as CPLEX-style LP text."""
    var_index = {name: i for i, (name, _) in enumerate(model.variables)}
    lines = ["Maximize"]
    obj = _fmt_terms(model.objective, var_index)
    lines.append(f" obj: {obj}" if obj else " obj: 0")
    lines.append("Subject To")
    for row in model.constraints:
        expr = _fmt_terms(row.terms, var_index) or "0"
        lines.append(f" {row.label}: {expr} {row.relation} {_fmt_num(row.rhs)}")
    lines.append("Bounds")
    for name, _ in model.variables:
        lines.append(f" 0 <= {name} <= 1")
    lines.append("Binaries")
    names = [name for name, _ in model.variables]
    for i in range(0, len(names), 8):
        lines.append(" " + " ".join(names[i:i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(model: IlpModel, path: str) -> None:
    """Write the model to ``path``; :func:`parse_lp` inverts this."""
    with open(path, "w") as fh:
        fh.write(lp_text(model))


_TOKEN_RE = re.compile(r"""
    (?P<sign>[+-])
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
""", re.VERBOSE)

_REL_RE = re.compile(r"<=|>=|=<|=>|<|>|=")

_SECTIONS = {
    "maximize": "objective", "maximise": "objective", "max": "objective",
    "minimize": "objective-min", "minimise": "objective-min", "min": "objective-min",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "binaries", "binary": "binaries", "bin": "binaries",
    "generals": "generals", "general": "generals", "gen": "generals",
    "end": "end",
}


class LpParseError(Exception):
    pass


def _parse_expr(text: str, where: str) -> dict[str, float]:
    terms: dict[str, float] = {}
    sign = 1.0
    pending: float | None = None
    for m in _TOKEN_RE.finditer(text):
        if m.lastgroup == "sign":
            if pending is not None:
                raise LpParseError(f"{where}: dangling coefficient before {m.group()!r}")
            sign = -sign if m.group() == "-" else sign
        elif m.lastgroup == "num":
            if pending is not None:
                raise LpParseError(f"{where}: two coefficients in a row")
            pending = float(m.group())
        else:
            coef = sign * (1.0 if pending is None else pending)
            terms[m.group()] = terms.get(m.group(), 0.0) + coef
            sign, pending = 1.0, None
    if pending is not None and pending != 0:
        raise LpParseError(f"{where}: constant {pending} has no variable")
    return terms


def _section_of(line: str) -> str | None:
    squashed = " ".join(line.strip().lower().split())
    return _SECTIONS.get(squashed)


def parse_lp(path: str) -> IlpModel:
    with open(path) as fh:
        return parse_lp_text(fh.read())


def parse_lp_text(text: str) -> IlpModel:
    """Parse LP text back into a model.

    Variable kinds are recovered from structure: anything appearing in
    a ``family-…`` row is an option variable, the rest are projects.
    The variable order comes from the Binaries section.
    """
    sense = "maximize"
    section = None
    obj_parts: list[str] = []
    row_lines: list[str] = []
    binaries: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        sec = _section_of(line)
        if sec == "end":
            break
        if sec is not None:
            section = sec
            if sec == "objective-min":
                sense, section = "minimize", "objective"
            continue
        if section == "objective":
            obj_parts.append(line)
        elif section == "rows":
            if ":" in line:
                row_lines.append(line)
            elif row_lines:
                row_lines[-1] += " " + line
            else:
                raise LpParseError(f"constraint line without a label: {line!r}")
        elif section == "binaries":
            binaries.extend(line.split())
        elif section in ("bounds", "generals"):
            pass
        else:
            raise LpParseError(f"content before any section: {line!r}")

    obj_text = " ".join(obj_parts)
    if ":" in obj_text:
        obj_text = obj_text.split(":", 1)[1]
    objective = _parse_expr(obj_text, "objective")

    rows: list[ConstraintRow] = []
    for line in row_lines:
        label, body = line.split(":", 1)
        m = _REL_RE.search(body)
        if m is None:
            raise LpParseError(f"row {label.strip()!r} has no relation")
        relation = {"=<": LE, "<": LE, "=>": GE, ">": GE}.get(m.group(), m.group())
        lhs, rhs_text = body[:m.start()], body[m.end():]
        try:
            rhs = float(rhs_text.replace(" ", ""))
        except ValueError:
            raise LpParseError(f"row {label.strip()!r} has non-numeric rhs "
                               f"{rhs_text.strip()!r}") from None
        rows.append(ConstraintRow(label=label.strip(), terms=_parse_expr(lhs, label.strip()),
                                  relation=relation, rhs=rhs))

    option_names: set[str] = set()
    for row in rows:
        if row.label.startswith("family-"):
            option_names.update(row.terms)
    if not binaries:
        ordered = sorted({n for row in rows for n in row.terms} | set(objective))
    else:
        ordered = binaries
    variables = tuple((n, "option" if n in option_names else "project") for n in ordered)
    full_objective = {n: objective.get(n, 0.0) for n in ordered}
    return IlpModel(variables=variables, objective=full_objective,
                    constraints=tuple(rows), sense=sense)


def models_equivalent(a: IlpModel, b: IlpModel) -> bool:
    """Same optimization problem: variables, objective, rows, sense."""
    def nz(d: dict[str, float]) -> dict[str, float]:
        return {k: v for k, v in d.items() if v != 0}
    if a.sense != b.sense or a.variables != b.variables:
        return False
    if nz(a.objective) != nz(b.objective):
        return False
    if len(a.constraints) != len(b.constraints):
        return False
    for ra, rb in zip(a.constraints, b.constraints):
        if (ra.label, ra.relation, ra.rhs) != (rb.label, rb.relation, rb.rhs):
            return False
        if nz(ra.terms) != nz(rb.terms):
            return False
    return True
