"""Reading and writing portfolio instances.

Two interchangeable formats:

* ``tables``: a directory of three delimited files mirroring the
  workshop spreadsheets: ``options.csv`` (family/option rows, one
  ``Value@<year>`` column per assessed year), ``projects.csv``
  (project rows with one column per year of project life), and
  ``budget.csv`` (one row per budgeted year).
* ``document``: a single structured-text (JSON) document with
  ``families``, ``options``, ``projects`` and ``budget`` arrays, used
  by the HTTP service.

The tables format cannot carry a family-level mandate (there is no
column for it), so writing an instance with a mandated family raises;
display names collapse to the variant key there, the instance label to
the directory name, and options are stored grouped by family. The
document format is lossless.
"""

from __future__ import annotations

import json
import os
from typing import Any

from .model import (BudgetLine, CapabilityOption, Family, PortfolioInstance,
                    Project, validate)

OPTION_HEADER = ["Family", "Option", "Projects", "Mandated", "Disabled"]
PROJECT_HEADER = ["Project", "ProjectID", "Mandated", "FixedInTime",
                  "PreferredStart", "EarliestStart", "LatestStart"]
BUDGET_HEADER = ["Year", "Budget", "UnderSlack", "OverSlack"]


class ParseError(Exception):
    """Malformed input, pointing at file and line where possible."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:" if line is None else f"{path}:{line}: "
        super().__init__(f"{where}{message}" if where else message)


class ValidationError(Exception):
    """The input parsed but breaks data rules."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"[{v.code}] {v.key}: {v.message}" for v in self.violations)
        super().__init__(f"instance failed validation: {lines}")


def _parse_bool(cell: str, path: str, line: int) -> bool:
    if cell.strip().lower() == "true":
        return True
    if cell.strip().lower() == "false":
        return False
    raise ParseError(f"expected True/False, got {cell!r}", path, line)


def _parse_int(cell: str, path: str, line: int, what: str) -> int:
    try:
        return int(cell.strip())
    except ValueError:
        raise ParseError(f"{what}: expected integer, got {cell!r}", path, line) from None


def _parse_float(cell: str, path: str, line: int, what: str) -> float:
    try:
        return float(cell.strip())
    except ValueError:
        raise ParseError(f"{what}: expected number, got {cell!r}", path, line) from None


def _read_rows(path: str) -> list[list[str]]:
    import csv
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh)]


def _load_options_file(path: str) -> tuple[list[Family], list[CapabilityOption]]:
    rows = _read_rows(path)
    if not rows:
        raise ParseError("empty file", path, 1)
    header = rows[0]
    if header[:5] != OPTION_HEADER:
        raise ParseError(f"header must start with {','.join(OPTION_HEADER)}", path, 1)
    value_years = []
    for cell in header[5:]:
        if not cell.startswith("Value@"):
            raise ParseError(f"value column must look like Value@<year>, got {cell!r}", path, 1)
        value_years.append(_parse_int(cell[len("Value@"):], path, 1, "value year"))

    options: list[CapabilityOption] = []
    family_order: list[str] = []
    family_options: dict[str, list[str]] = {}
    for i, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) < 5:
            raise ParseError("row has fewer cells than the fixed columns", path, i)
        fam, opt, projects_cell = row[0].strip(), row[1].strip(), row[2]
        refs = frozenset(p.strip() for p in projects_cell.split(";") if p.strip())
        schedule: dict[int, float] = {}
        for year, cell in zip(value_years, row[5:]):
            if cell.strip() != "":
                schedule[year] = _parse_float(cell, path, i, f"value of {opt}")
        options.append(CapabilityOption(
            option_key=opt, family_key=fam, project_refs=refs,
            value_schedule=schedule,
            mandated=_parse_bool(row[3], path, i),
            disabled=_parse_bool(row[4], path, i)))
        if fam not in family_options:
            family_order.append(fam)
            family_options[fam] = []
        family_options[fam].append(opt)

    families = [Family(family_key=f, option_keys=frozenset(family_options[f]))
                for f in family_order]
    return families, options


def _load_projects_file(path: str) -> list[Project]:
    rows = _read_rows(path)
    if not rows:
        raise ParseError("empty file", path, 1)
    header = rows[0]
    if header[:7] != PROJECT_HEADER:
        raise ParseError(f"header must start with {','.join(PROJECT_HEADER)}", path, 1)
    for j, cell in enumerate(header[7:], start=1):
        if _parse_int(cell, path, 1, "profile year column") != j:
            raise ParseError(f"profile year columns must run 1,2,..., got {cell!r}", path, 1)

    projects: list[Project] = []
    for i, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) < 7:
            raise ParseError("row has fewer cells than the fixed columns", path, i)
        cells = row[7:]
        last = max((j for j, c in enumerate(cells) if c.strip() != ""), default=-1)
        profile = tuple(_parse_int(c, path, i, "cost") if c.strip() != "" else 0
                        for c in cells[:last + 1])
        projects.append(Project(
            variant_key=row[0].strip(), project_id=row[1].strip(), name=row[0].strip(),
            mandated=_parse_bool(row[2], path, i),
            fixed_in_time=_parse_bool(row[3], path, i),
            preferred_start=_parse_int(row[4], path, i, "preferred start"),
            earliest_start=_parse_int(row[5], path, i, "earliest start"),
            latest_start=_parse_int(row[6], path, i, "latest start"),
            cost_profile=profile))
    return projects


def _load_budget_file(path: str) -> list[BudgetLine]:
    rows = _read_rows(path)
    if not rows:
        raise ParseError("empty file", path, 1)
    if rows[0][:4] != BUDGET_HEADER:
        raise ParseError(f"header must be {','.join(BUDGET_HEADER)}", path, 1)
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        out.append(BudgetLine(
            year=_parse_int(row[0], path, i, "year"),
            budget=_parse_int(row[1], path, i, "budget"),
            under_slack=_parse_int(row[2], path, i, "under slack"),
            over_slack=_parse_int(row[3], path, i, "over slack")))
    return out


def _require(record: dict, key: str, path: str, what: str) -> Any:
    if key not in record:
        raise ParseError(f"{what} record is missing field {key!r}", path)
    return record[key]


def from_document(doc: dict, path: str = "<document>") -> PortfolioInstance:
    """Build an instance from a structured-text document (parsed JSON)."""
    if not isinstance(doc, dict):
        raise ParseError("document root must be an object", path)
    for section in ("families", "options", "projects", "budget"):
        if section not in doc or not isinstance(doc[section], list):
            raise ParseError(f"document needs a {section!r} array", path)
    if not doc["families"]:
        raise ParseError("family set empty", path)

    families = tuple(Family(
        family_key=_require(r, "family_key", path, "family"),
        option_keys=frozenset(_require(r, "option_keys", path, "family")),
        mandated=bool(r.get("mandated", False)),
    ) for r in doc["families"])
    options = tuple(CapabilityOption(
        option_key=_require(r, "option_key", path, "option"),
        family_key=_require(r, "family_key", path, "option"),
        project_refs=frozenset(r.get("project_refs", [])),
        value_schedule={int(y): float(v)
                        for y, v in _require(r, "value_schedule", path, "option").items()},
        mandated=bool(r.get("mandated", False)),
        disabled=bool(r.get("disabled", False)),
    ) for r in doc["options"])
    projects = tuple(Project(
        variant_key=_require(r, "variant_key", path, "project"),
        project_id=_require(r, "project_id", path, "project"),
        name=r.get("name", _require(r, "variant_key", path, "project")),
        mandated=bool(r.get("mandated", False)),
        fixed_in_time=bool(r.get("fixed_in_time", False)),
        preferred_start=int(_require(r, "preferred_start", path, "project")),
        earliest_start=int(_require(r, "earliest_start", path, "project")),
        latest_start=int(_require(r, "latest_start", path, "project")),
        cost_profile=tuple(int(c) for c in _require(r, "cost_profile", path, "project")),
    ) for r in doc["projects"])
    budget = tuple(BudgetLine(
        year=int(_require(r, "year", path, "budget")),
        budget=int(_require(r, "budget", path, "budget")),
        under_slack=int(r.get("under_slack", 0)),
        over_slack=int(r.get("over_slack", 0)),
    ) for r in doc["budget"])
    return PortfolioInstance(families=families, options=options,
                             projects=projects, budget=budget,
                             label=str(doc.get("label", "")))


def to_document(instance: PortfolioInstance) -> dict:
    """Inverse of :func:`from_document`; arrays keep instance order."""
    return {
        "label": instance.label,
        "families": [{"family_key": f.family_key,
                      "option_keys": sorted(f.option_keys),
                      "mandated": f.mandated} for f in instance.families],
        "options": [{"option_key": o.option_key,
                     "family_key": o.family_key,
                     "project_refs": sorted(o.project_refs),
                     "value_schedule": {str(y): o.value_schedule[y]
                                        for y in sorted(o.value_schedule)},
                     "mandated": o.mandated,
                     "disabled": o.disabled} for o in instance.options],
        "projects": [{"variant_key": p.variant_key,
                      "project_id": p.project_id,
                      "name": p.name,
                      "mandated": p.mandated,
                      "fixed_in_time": p.fixed_in_time,
                      "preferred_start": p.preferred_start,
                      "earliest_start": p.earliest_start,
                      "latest_start": p.latest_start,
                      "cost_profile": list(p.cost_profile)} for p in instance.projects],
        "budget": [{"year": b.year,
                    "budget": b.budget,
                    "under_slack": b.under_slack,
                    "over_slack": b.over_slack} for b in instance.budget],
    }


def load_instance(path: str, format: str | None = None) -> PortfolioInstance:
    """Load and validate an instance.

    ``format`` is ``"tables"`` (directory of delimited files) or
    ``"document"`` (single JSON file); when omitted it is inferred
    from the path. Raises :class:`ParseError` on malformed input and
    :class:`ValidationError` when data rules are broken.
    """
    if format is None:
        format = "tables" if os.path.isdir(path) else "document"
    if format == "tables":
        families, options = _load_options_file(os.path.join(path, "options.csv"))
        projects = _load_projects_file(os.path.join(path, "projects.csv"))
        budget = _load_budget_file(os.path.join(path, "budget.csv"))
        if not families:
            raise ParseError("family set empty", os.path.join(path, "options.csv"))
        instance = PortfolioInstance(
            families=tuple(families), options=tuple(options),
            projects=tuple(projects), budget=tuple(budget),
            label=os.path.basename(os.path.normpath(path)))
    elif format == "document":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad structured text: {exc.msg}", path, exc.lineno) from None
        instance = from_document(doc, path)
    else:
        raise ValueError(f"unknown format {format!r}")

    violations = validate(instance)
    if violations:
        raise ValidationError(violations)
    return instance


def _format_value(v: float) -> str:
    return repr(int(v)) if isinstance(v, int) else repr(v)


def write_instance(instance: PortfolioInstance, path: str, format: str = "document") -> None:
    """Write an instance so that :func:`load_instance` reproduces it.

    ``tables`` writes a directory of three delimited files and refuses
    mandated families (the format has no column for them).
    """
    if format == "document":
        with open(path, "w") as fh:
            json.dump(to_document(instance), fh, indent=2)
            fh.write("\n")
        return
    if format != "tables":
        raise ValueError(f"unknown format {format!r}")

    for f in instance.families:
        if f.mandated:
            raise ValueError(f"tables format cannot express mandated family {f.family_key!r};"
                             " use the document format")

    import csv
    os.makedirs(path, exist_ok=True)
    value_years = sorted({y for o in instance.options for y in o.value_schedule})
    with open(os.path.join(path, "options.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OPTION_HEADER + [f"Value@{y}" for y in value_years])
        # Grouped by family so the loader reconstructs family order.
        for fam in instance.families:
            for o in instance.options:
                if o.option_key not in fam.option_keys:
                    continue
                cells = [o.family_key, o.option_key, ";".join(sorted(o.project_refs)),
                         str(o.mandated), str(o.disabled)]
                cells += [_format_value(o.value_schedule[y]) if y in o.value_schedule else ""
                          for y in value_years]
                w.writerow(cells)
    max_len = max((len(p.cost_profile) for p in instance.projects), default=0)
    with open(os.path.join(path, "projects.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROJECT_HEADER + [str(j) for j in range(1, max_len + 1)])
        for p in instance.projects:
            cells = [p.variant_key, p.project_id, str(p.mandated), str(p.fixed_in_time),
                     str(p.preferred_start), str(p.earliest_start), str(p.latest_start)]
            cells += [str(c) for c in p.cost_profile]
            cells += [""] * (max_len - len(p.cost_profile))
            w.writerow(cells)
    with open(os.path.join(path, "budget.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BUDGET_HEADER)
        for b in instance.budget:
            w.writerow([str(b.year), str(b.budget), str(b.under_slack), str(b.over_slack)])
