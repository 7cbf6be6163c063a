"""HTTP workshop service around the portfolio optimizer.

Portfolios live as immutable versions: ingesting a document creates a
root version, a batch of edits forks a child version, and optimization
reads a clone so the source version never changes. Versions and jobs
are persisted as JSON documents in an append-only store directory; a
restarted service picks them all up again.

Jobs run on plain threads. A per-version lock serializes jobs that
target the same version; jobs on different versions run concurrently.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import threading
import uuid
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .expansion import ExpansionError, expand
from .ilp import BuildError, build_model, lp_text, source_key
from .io import ParseError, from_document, to_document
from .model import BudgetLine, PortfolioInstance, validate
from .solver import SolveOptions, solve

__all__ = ["ServiceError", "WorkshopService", "build_app"]

EDIT_ACTIONS = frozenset({
    "mandate_option", "disable_option", "lock_project", "mandate_project",
    "set_cost_profile", "set_budget_line", "set_start_window",
})


class ServiceError(Exception):
    """Request failure carrying an HTTP status and a machine code."""

    def __init__(self, status: int, code: str, message: str,
                 violations: list[dict] | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.violations = violations or []

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self),
                "violations": self.violations}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _new_id(prefix: str) -> str:
    return prefix + uuid.uuid4().hex[:12]


def _atomic_write(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, indent=1, sort_keys=True))
    os.replace(tmp, path)


class WorkshopService:
    """Version store plus asynchronous clone-and-optimize jobs."""

    def __init__(self, store_dir: str | Path):
        self.store = Path(store_dir)
        self._versions_dir = self.store / "versions"
        self._jobs_dir = self.store / "jobs"
        self._versions_dir.mkdir(parents=True, exist_ok=True)
        self._jobs_dir.mkdir(parents=True, exist_ok=True)
        self._mu = threading.Lock()
        self._version_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._versions: dict[str, dict] = {}
        self._jobs: dict[str, dict] = {}
        for f in self._versions_dir.glob("*.json"):
            rec = json.loads(f.read_text())
            self._versions[rec["version_id"]] = rec
        for f in self._jobs_dir.glob("*.json"):
            rec = json.loads(f.read_text())
            # A job interrupted by a restart can never finish.
            if rec["state"] in ("queued", "running"):
                rec["state"] = "failed"
                rec["error"] = "interrupted by service restart"
            self._jobs[rec["job_id"]] = rec

    # -- versions ----------------------------------------------------

    def ingest(self, document: dict) -> dict:
        instance = self._parse(document)
        return self._store_version(instance, parent_id=None, edits=[])

    def get_version(self, version_id: str) -> dict:
        with self._mu:
            rec = self._versions.get(version_id)
        if rec is None:
            raise ServiceError(404, "unknown-version", f"no version {version_id!r}")
        return rec

    def apply_edits(self, version_id: str, edits: list[dict]) -> dict:
        """Fork the version with the whole batch applied in order."""
        if not isinstance(edits, list) or not edits:
            raise ServiceError(400, "empty-edits", "edits must be a non-empty array")
        parent = self.get_version(version_id)
        instance = from_document(parent["document"])
        for i, edit in enumerate(edits):
            instance = _apply_edit(instance, edit, where=f"edits[{i}]")
        return self._store_version(instance, parent_id=version_id, edits=edits)

    def _parse(self, document: dict) -> PortfolioInstance:
        try:
            instance = from_document(document)
        except ParseError as exc:
            raise ServiceError(400, "parse", str(exc)) from exc
        self._check(instance)
        return instance

    def _check(self, instance: PortfolioInstance) -> None:
        violations = validate(instance)
        if violations:
            raise ServiceError(400, "invalid", "portfolio fails validation",
                               [dataclasses.asdict(v) for v in violations])

    def _store_version(self, instance: PortfolioInstance,
                       parent_id: str | None, edits: list[dict]) -> dict:
        self._check(instance)
        rec = {
            "version_id": _new_id("v-"),
            "parent_id": parent_id,
            "created_at": _now(),
            "edits": edits,
            "document": to_document(instance),
        }
        with self._mu:
            self._versions[rec["version_id"]] = rec
            _atomic_write(self._versions_dir / f"{rec['version_id']}.json", rec)
        return rec

    # -- optimization jobs -------------------------------------------

    def optimize(self, version_id: str, options: dict | None = None) -> dict:
        self.get_version(version_id)
        opts = _parse_options(options or {})
        job = {
            "job_id": _new_id("j-"),
            "version_id": version_id,
            "created_at": _now(),
            "options": dataclasses.asdict(opts),
            "state": "queued",
            "result": None,
            "error": None,
        }
        self._put_job(job)
        worker = threading.Thread(target=self._run_job, daemon=True,
                                  args=(job["job_id"], version_id, opts))
        worker.start()
        return job

    def get_job(self, job_id: str) -> dict:
        with self._mu:
            rec = self._jobs.get(job_id)
        if rec is None:
            raise ServiceError(404, "unknown-job", f"no job {job_id!r}")
        return rec

    def _put_job(self, job: dict) -> None:
        with self._mu:
            self._jobs[job["job_id"]] = job
            _atomic_write(self._jobs_dir / f"{job['job_id']}.json", job)

    def _update_job(self, job_id: str, **changes) -> None:
        with self._mu:
            job = dict(self._jobs[job_id])
            job.update(changes)
            self._jobs[job_id] = job
            _atomic_write(self._jobs_dir / f"{job_id}.json", job)

    def _run_job(self, job_id: str, version_id: str, opts: SolveOptions) -> None:
        lock = self._version_locks[version_id]
        with lock:
            self._update_job(job_id, state="running")
            try:
                version = self.get_version(version_id)
                # Clone semantics: the job re-parses the stored document
                # and never touches the version record.
                instance = from_document(version["document"])
                result = _optimize_instance(instance, opts)
            except Exception as exc:
                self._update_job(job_id, state="failed", error=str(exc))
                return
            self._update_job(job_id, state="done", result=result)

    # -- export --------------------------------------------------------

    def export_lp(self, version_id: str) -> str:
        version = self.get_version(version_id)
        instance = from_document(version["document"])
        try:
            return lp_text(build_model(instance, expand(instance)))
        except (BuildError, ExpansionError) as exc:
            raise ServiceError(409, "unbuildable", str(exc)) from exc


# -- edit application --------------------------------------------------


def _need(edit: dict, key: str, where: str) -> Any:
    if key not in edit:
        raise ServiceError(400, "missing-field", f"{where}: edit needs {key!r}")
    return edit[key]


def _apply_edit(instance: PortfolioInstance, edit: dict, where: str) -> PortfolioInstance:
    if not isinstance(edit, dict):
        raise ServiceError(400, "bad-edit", f"{where}: edit must be an object")
    action = edit.get("action")
    if action not in EDIT_ACTIONS:
        raise ServiceError(400, "bad-action",
                           f"{where}: unknown action {action!r}")
    if action in ("mandate_option", "disable_option"):
        return _edit_option(instance, action, _need(edit, "option_key", where), where)
    if action == "lock_project":
        return _lock_project(instance, _need(edit, "project_id", where),
                             int(_need(edit, "start_year", where)), where)
    if action == "mandate_project":
        return _mandate_project(instance, _need(edit, "project_id", where), where)
    if action == "set_cost_profile":
        profile = _need(edit, "cost_profile", where)
        return _set_cost_profile(instance, _need(edit, "variant_key", where),
                                 profile, where)
    if action == "set_budget_line":
        return _set_budget_line(instance, edit, where)
    return _set_start_window(instance, _need(edit, "project_id", where),
                             int(_need(edit, "earliest", where)),
                             int(_need(edit, "latest", where)), where)


def _edit_option(instance: PortfolioInstance, action: str, key: str,
                 where: str) -> PortfolioInstance:
    target = next((o for o in instance.options if o.option_key == key), None)
    if target is None:
        raise ServiceError(400, "unknown-key", f"{where}: no option {key!r}")
    if action == "mandate_option":
        if target.disabled:
            raise ServiceError(409, "mandate-disabled",
                               f"{where}: option {key!r} is disabled")
        rival = next((o.option_key for o in instance.options
                      if o.family_key == target.family_key and o.mandated
                      and o.option_key != key), None)
        if rival is not None:
            raise ServiceError(409, "family-double-mandate",
                               f"{where}: {rival!r} is already mandated in "
                               f"family {target.family_key!r}")
        replaced = dataclasses.replace(target, mandated=True)
    else:
        if target.mandated:
            raise ServiceError(409, "disable-mandated",
                               f"{where}: option {key!r} is mandated")
        replaced = dataclasses.replace(target, disabled=True)
    options = tuple(replaced if o.option_key == key else o for o in instance.options)
    return dataclasses.replace(instance, options=options)


def _variants_of(instance: PortfolioInstance, project_id: str, where: str):
    hits = [p for p in instance.projects if p.project_id == project_id]
    if not hits:
        raise ServiceError(400, "unknown-key", f"{where}: no project {project_id!r}")
    return hits


def _replace_projects(instance: PortfolioInstance, changed) -> PortfolioInstance:
    by_key = {p.variant_key: p for p in changed}
    projects = tuple(by_key.get(p.variant_key, p) for p in instance.projects)
    return dataclasses.replace(instance, projects=projects)


def _lock_project(instance, project_id, year, where) -> PortfolioInstance:
    changed = []
    for p in _variants_of(instance, project_id, where):
        if not (p.earliest_start <= year <= p.latest_start):
            raise ServiceError(409, "lock-outside-window",
                               f"{where}: year {year} outside "
                               f"{p.earliest_start}..{p.latest_start} "
                               f"for {p.variant_key!r}")
        changed.append(dataclasses.replace(p, fixed_in_time=True,
                                           preferred_start=year))
    return _replace_projects(instance, changed)


def _mandate_project(instance, project_id, where) -> PortfolioInstance:
    changed = [dataclasses.replace(p, mandated=True)
               for p in _variants_of(instance, project_id, where)]
    return _replace_projects(instance, changed)


def _set_cost_profile(instance, variant_key, profile, where) -> PortfolioInstance:
    target = next((p for p in instance.projects if p.variant_key == variant_key), None)
    if target is None:
        raise ServiceError(400, "unknown-key", f"{where}: no variant {variant_key!r}")
    if (not isinstance(profile, list) or not profile
            or any(not isinstance(c, int) or c < 0 for c in profile)):
        raise ServiceError(400, "bad-profile",
                           f"{where}: cost_profile must be a non-empty array "
                           "of non-negative integers")
    return _replace_projects(
        instance, [dataclasses.replace(target, cost_profile=tuple(profile))])


def _set_budget_line(instance, edit, where) -> PortfolioInstance:
    year = int(_need(edit, "year", where))
    line = BudgetLine(year=year, budget=int(_need(edit, "budget", where)),
                      under_slack=int(edit.get("under_slack", 0)),
                      over_slack=int(edit.get("over_slack", 0)))
    rest = tuple(b for b in instance.budget if b.year != year)
    budget = tuple(sorted(rest + (line,), key=lambda b: b.year))
    return dataclasses.replace(instance, budget=budget)


def _set_start_window(instance, project_id, earliest, latest, where) -> PortfolioInstance:
    if earliest > latest:
        raise ServiceError(400, "bad-window",
                           f"{where}: earliest {earliest} after latest {latest}")
    changed = []
    for p in _variants_of(instance, project_id, where):
        if p.fixed_in_time and not (earliest <= p.preferred_start <= latest):
            raise ServiceError(409, "window-conflict",
                               f"{where}: {p.variant_key!r} is locked to "
                               f"{p.preferred_start}, outside {earliest}..{latest}")
        preferred = min(max(p.preferred_start, earliest), latest)
        changed.append(dataclasses.replace(p, earliest_start=earliest,
                                           latest_start=latest,
                                           preferred_start=preferred))
    return _replace_projects(instance, changed)


# -- solve plumbing -----------------------------------------------------


def _parse_options(raw: dict) -> SolveOptions:
    if not isinstance(raw, dict):
        raise ServiceError(400, "bad-options", "options must be an object")
    allowed = {f.name for f in dataclasses.fields(SolveOptions)}
    unknown = set(raw) - allowed
    if unknown:
        raise ServiceError(400, "bad-options",
                           f"unknown solve options: {sorted(unknown)}")
    try:
        return SolveOptions(**raw)
    except (TypeError, ValueError) as exc:
        raise ServiceError(400, "bad-options", str(exc)) from exc


def _optimize_instance(instance: PortfolioInstance, opts: SolveOptions) -> dict:
    expansion = expand(instance)
    model = build_model(instance, expansion)
    res = solve(model, opts)

    family_of = {o.option_key: o.family_key for o in instance.options}
    options_by_key = {po.pseudo_key: po for po in expansion.pseudo_options}
    projects_by_key = {pp.pseudo_key: pp for pp in expansion.pseudo_projects}

    selected_options = []
    selected_projects = []
    spend: dict[int, int] = {}
    if res.incumbent:
        for name, val in res.incumbent.items():
            if val < 0.5:
                continue
            key = source_key(name)
            if key in options_by_key:
                po = options_by_key[key]
                selected_options.append({
                    "option_key": po.source_option,
                    "family_key": family_of[po.source_option],
                    "effective_year": po.effective_year,
                    "value": po.value,
                })
            elif key in projects_by_key:
                pp = projects_by_key[key]
                years = sorted(pp.yearly_cost)
                selected_projects.append({
                    "variant_key": pp.source_variant,
                    "start_year": pp.start_year,
                    "end_year": years[-1] if years else pp.start_year,
                })
                for y, c in pp.yearly_cost.items():
                    spend[y] = spend.get(y, 0) + c
    selected_options.sort(key=lambda d: d["option_key"])
    selected_projects.sort(key=lambda d: d["variant_key"])

    spend_rows = [{
        "year": b.year,
        "budget": b.budget,
        "under_slack": b.under_slack,
        "over_slack": b.over_slack,
        "spend": spend.get(b.year, 0),
    } for b in sorted(instance.budget, key=lambda b: b.year)]

    violated_years = sorted({
        int(label.rsplit("-", 1)[1])
        for label in res.violated_rows
        if label.startswith(("budget-hi-", "budget-lo-"))
    })
    def finite(v: float) -> float | None:
        # Strict JSON has no Infinity/NaN; absent is null.
        return float(v) if math.isfinite(v) else None

    return {
        "status": res.status,
        "value": None if res.incumbent is None else finite(res.primal_bound),
        "bound": finite(res.dual_bound),
        "gap": finite(res.relative_gap),
        "nodes": res.nodes_explored,
        "wall_time": res.wall_time,
        "selected_options": selected_options,
        "selected_projects": selected_projects,
        "spend": spend_rows,
        "violated_rows": list(res.violated_rows),
        "violated_years": violated_years,
    }


# -- HTTP layer ---------------------------------------------------------


def build_app(service: WorkshopService):
    """FastAPI application exposing the workshop endpoints."""
    from fastapi import Body, FastAPI
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.requests import Request
    from fastapi.responses import JSONResponse, PlainTextResponse

    app = FastAPI(title="portfolio workshop")
    # the workbench is served as static files from another port
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.payload())

    @app.post("/portfolios", status_code=201)
    def ingest(document: dict = Body(...)):
        rec = service.ingest(document)
        return {"version_id": rec["version_id"], "parent_id": None,
                "created_at": rec["created_at"]}

    @app.get("/portfolios/{version_id}")
    def get_version(version_id: str):
        return service.get_version(version_id)

    @app.post("/portfolios/{version_id}/edits", status_code=201)
    def apply_edits(version_id: str, payload: dict = Body(...)):
        rec = service.apply_edits(version_id, payload.get("edits"))
        return {"version_id": rec["version_id"], "parent_id": version_id,
                "created_at": rec["created_at"]}

    @app.post("/portfolios/{version_id}/optimize", status_code=202)
    def optimize(version_id: str, payload: dict | None = Body(None)):
        job = service.optimize(version_id, (payload or {}).get("options"))
        return {"job_id": job["job_id"], "version_id": version_id,
                "state": job["state"]}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return service.get_job(job_id)

    @app.get("/portfolios/{version_id}/export.lp", response_class=PlainTextResponse)
    def export_lp(version_id: str):
        return service.export_lp(version_id)

    return app


def main(argv=None) -> int:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="optfolio-service")
    parser.add_argument("--store", default="./workshop-store")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)
    app = build_app(WorkshopService(args.store))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
