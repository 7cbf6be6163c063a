"""Workshop service endpoints, edit semantics, and job lifecycle."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from optfolio.expansion import expand
from optfolio.ilp import build_model, lp_text, models_equivalent, parse_lp_text
from optfolio.io import to_document
from optfolio.service import WorkshopService, build_app


@pytest.fixture
def svc(tmp_path):
    return WorkshopService(tmp_path / "store")


@pytest.fixture
def client(svc):
    return TestClient(build_app(svc))


@pytest.fixture
def toy_doc(toy):
    return to_document(toy)


def ingest(client, doc):
    resp = client.post("/portfolios", json=doc)
    assert resp.status_code == 201, resp.text
    return resp.json()["version_id"]


def wait_job(client, job_id, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        rec = client.get(f"/jobs/{job_id}").json()
        if rec["state"] in ("done", "failed"):
            return rec
        assert rec["result"] is None
        time.sleep(0.02)
    raise AssertionError(f"job {job_id} still {rec['state']} after {timeout}s")


def run_optimize(client, version_id, options=None):
    resp = client.post(f"/portfolios/{version_id}/optimize",
                       json={"options": options or {}})
    assert resp.status_code == 202, resp.text
    return wait_job(client, resp.json()["job_id"])


def test_ingest_and_get_round_trip(client, toy_doc):
    vid = ingest(client, toy_doc)
    rec = client.get(f"/portfolios/{vid}").json()
    assert rec["version_id"] == vid
    assert rec["parent_id"] is None
    assert rec["edits"] == []
    assert rec["document"] == toy_doc


def test_reingest_creates_distinct_versions(client, toy_doc):
    assert ingest(client, toy_doc) != ingest(client, toy_doc)


def test_ingest_rejects_malformed(client, svc, toy_doc):
    resp = client.post("/portfolios", json={"families": []})
    assert resp.status_code == 400
    assert resp.json()["error"] == "parse"
    assert list((svc.store / "versions").glob("*.json")) == []


def test_ingest_rejects_validation_failures(client, toy_doc):
    doc = json.loads(json.dumps(toy_doc))
    doc["options"][1]["project_refs"] = ["P1", "NOPE"]
    resp = client.post("/portfolios", json=doc)
    assert resp.status_code == 400
    body = resp.json()
    assert body["error"] == "invalid"
    assert any(v["key"] == "NOPE" or "NOPE" in v["message"]
               for v in body["violations"])


def test_unknown_version_is_404(client):
    assert client.get("/portfolios/v-missing").status_code == 404
    assert client.post("/portfolios/v-missing/edits",
                       json={"edits": [{"action": "mandate_project",
                                        "project_id": "P1"}]}).status_code == 404
    assert client.post("/portfolios/v-missing/optimize", json={}).status_code == 404
    assert client.get("/jobs/j-missing").status_code == 404


def test_edits_fork_and_leave_parent_untouched(client, toy_doc):
    vid = ingest(client, toy_doc)
    resp = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "disable_option", "option_key": "F2.2"}]})
    assert resp.status_code == 201
    child = resp.json()["version_id"]
    assert child != vid

    child_rec = client.get(f"/portfolios/{child}").json()
    assert child_rec["parent_id"] == vid
    assert child_rec["edits"][0]["action"] == "disable_option"
    flags = {o["option_key"]: o["disabled"] for o in child_rec["document"]["options"]}
    assert flags["F2.2"] is True

    parent_rec = client.get(f"/portfolios/{vid}").json()
    assert parent_rec["document"] == toy_doc


def test_edit_batch_applies_in_order_as_one_fork(client, toy_doc):
    vid = ingest(client, toy_doc)
    resp = client.post(f"/portfolios/{vid}/edits", json={"edits": [
        {"action": "mandate_option", "option_key": "F2.2"},
        {"action": "set_budget_line", "year": 6, "budget": 1000},
    ]})
    assert resp.status_code == 201
    doc = client.get(f"/portfolios/{resp.json()['version_id']}").json()["document"]
    assert {o["option_key"]: o["mandated"] for o in doc["options"]}["F2.2"]
    assert {b["year"] for b in doc["budget"]} == {1, 2, 3, 4, 5, 6}


def test_empty_edit_batch_is_rejected(client, toy_doc):
    vid = ingest(client, toy_doc)
    assert client.post(f"/portfolios/{vid}/edits",
                       json={"edits": []}).status_code == 400


@pytest.mark.parametrize("edits,code", [
    ([{"action": "disable_option", "option_key": "F2.2"},
      {"action": "mandate_option", "option_key": "F2.2"}], "mandate-disabled"),
    ([{"action": "mandate_option", "option_key": "F2.2"},
      {"action": "disable_option", "option_key": "F2.2"}], "disable-mandated"),
    ([{"action": "mandate_option", "option_key": "F2.1"},
      {"action": "mandate_option", "option_key": "F2.2"}], "family-double-mandate"),
])
def test_conflicting_edits_are_409(client, toy_doc, edits, code):
    vid = ingest(client, toy_doc)
    resp = client.post(f"/portfolios/{vid}/edits", json={"edits": edits})
    assert resp.status_code == 409
    assert resp.json()["error"] == code


def test_conflicting_batch_creates_no_version(client, svc, toy_doc):
    vid = ingest(client, toy_doc)
    before = len(list((svc.store / "versions").glob("*.json")))
    client.post(f"/portfolios/{vid}/edits", json={"edits": [
        {"action": "mandate_option", "option_key": "F2.1"},
        {"action": "mandate_option", "option_key": "F2.2"}]})
    assert len(list((svc.store / "versions").glob("*.json"))) == before


def test_mandating_twice_is_idempotent_content(client, toy_doc):
    vid = ingest(client, toy_doc)
    first = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "mandate_option", "option_key": "F2.2"}]}
    ).json()["version_id"]
    second = client.post(f"/portfolios/{first}/edits", json={
        "edits": [{"action": "mandate_option", "option_key": "F2.2"}]}
    ).json()["version_id"]
    assert second != first
    doc1 = client.get(f"/portfolios/{first}").json()["document"]
    doc2 = client.get(f"/portfolios/{second}").json()["document"]
    assert doc1 == doc2


def test_unknown_edit_keys_are_400(client, toy_doc):
    vid = ingest(client, toy_doc)
    for edits in (
        [{"action": "mandate_option", "option_key": "F9.9"}],
        [{"action": "lock_project", "project_id": "P99", "start_year": 1}],
        [{"action": "warp_option", "option_key": "F1.1"}],
        [{"action": "mandate_option"}],
    ):
        resp = client.post(f"/portfolios/{vid}/edits", json={"edits": edits})
        assert resp.status_code == 400, edits


def test_lock_project_pins_start(client, toy_doc):
    vid = ingest(client, toy_doc)
    child = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "lock_project", "project_id": "P1",
                   "start_year": 2}]}).json()["version_id"]
    doc = client.get(f"/portfolios/{child}").json()["document"]
    p1 = next(p for p in doc["projects"] if p["project_id"] == "P1")
    assert p1["fixed_in_time"] is True
    assert p1["preferred_start"] == 2


def test_lock_outside_window_is_409(client, toy_doc):
    vid = ingest(client, toy_doc)
    resp = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "lock_project", "project_id": "P5",
                   "start_year": 4}]})
    assert resp.status_code == 409
    assert resp.json()["error"] == "lock-outside-window"


def test_start_window_edit_clamps_preferred(client, toy_doc):
    vid = ingest(client, toy_doc)
    child = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "set_start_window", "project_id": "P1",
                   "earliest": 2, "latest": 3}]}).json()["version_id"]
    doc = client.get(f"/portfolios/{child}").json()["document"]
    p1 = next(p for p in doc["projects"] if p["project_id"] == "P1")
    assert (p1["earliest_start"], p1["latest_start"]) == (2, 3)
    assert p1["preferred_start"] == 2


def test_window_conflicts_with_lock_are_409(client, toy_doc):
    vid = ingest(client, toy_doc)
    resp = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "set_start_window", "project_id": "P2",
                   "earliest": 3, "latest": 4}]})
    assert resp.status_code == 409
    assert resp.json()["error"] == "window-conflict"


def test_bad_cost_profile_is_400(client, toy_doc):
    vid = ingest(client, toy_doc)
    resp = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "set_cost_profile", "variant_key": "P1",
                   "cost_profile": []}]})
    assert resp.status_code == 400
    assert resp.json()["error"] == "bad-profile"


def test_optimize_toy_selects_best_pair(client, toy_doc):
    vid = ingest(client, toy_doc)
    job = run_optimize(client, vid)
    assert job["state"] == "done"
    res = job["result"]
    assert res["status"] == "optimal"
    assert res["value"] == pytest.approx(0.9)
    assert {o["option_key"] for o in res["selected_options"]} == {"F1.1", "F2.1"}
    assert all(o["family_key"] in ("F1", "F2") for o in res["selected_options"])
    starts = {p["variant_key"]: p["start_year"] for p in res["selected_projects"]}
    assert starts["P2"] == 2 and starts["P3"] == 1 and starts["P4"] == 1
    for row in res["spend"]:
        assert row["budget"] - row["under_slack"] <= row["spend"]
        assert row["spend"] <= row["budget"] + row["over_slack"]

    after = client.get(f"/portfolios/{vid}").json()["document"]
    assert after == toy_doc


def test_disable_edit_changes_the_optimum(client, toy_doc):
    vid = ingest(client, toy_doc)
    child = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "disable_option", "option_key": "F2.1"}]}
    ).json()["version_id"]
    res = run_optimize(client, child)["result"]
    assert res["value"] == pytest.approx(0.7)
    assert {o["option_key"] for o in res["selected_options"]} == {"F1.1", "F2.2"}
    assert all(o["option_key"] != "F2.1" for o in res["selected_options"])


def test_mandate_project_pulls_in_its_option(client, toy_doc):
    vid = ingest(client, toy_doc)
    child = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "mandate_project", "project_id": "P5"}]}
    ).json()["version_id"]
    res = run_optimize(client, child)["result"]
    assert res["value"] == pytest.approx(0.7)
    assert {o["option_key"] for o in res["selected_options"]} == {"F1.1", "F2.2"}


def test_unsatisfiable_floor_reports_violated_years(client, toy_doc):
    vid = ingest(client, toy_doc)
    child = client.post(f"/portfolios/{vid}/edits", json={
        "edits": [{"action": "set_budget_line", "year": 1, "budget": 50000,
                   "under_slack": 0, "over_slack": 2000}]}).json()["version_id"]
    job = run_optimize(client, child)
    assert job["state"] == "done"
    res = job["result"]
    assert res["status"] == "infeasible"
    assert res["value"] is None
    assert res["selected_options"] == []
    assert 1 in res["violated_years"]


def test_gap_option_is_honoured(client, toy_doc):
    vid = ingest(client, toy_doc)
    res = run_optimize(client, vid, options={"gap_tolerance": 1.0})["result"]
    assert res["status"] in ("optimal", "gap_reached")
    assert res["gap"] <= 1.0


def test_bad_solve_options_are_400(client, toy_doc):
    vid = ingest(client, toy_doc)
    resp = client.post(f"/portfolios/{vid}/optimize",
                       json={"options": {"warp_factor": 9}})
    assert resp.status_code == 400
    assert resp.json()["error"] == "bad-options"


def test_concurrent_jobs_on_different_versions(client, toy_doc):
    vids = [ingest(client, toy_doc) for _ in range(3)]
    jobs = [client.post(f"/portfolios/{v}/optimize", json={}).json()["job_id"]
            for v in vids]
    for job_id in jobs:
        rec = wait_job(client, job_id)
        assert rec["state"] == "done"
        assert rec["result"]["value"] == pytest.approx(0.9)


def test_export_lp_matches_built_model(client, toy, toy_doc):
    vid = ingest(client, toy_doc)
    resp = client.get(f"/portfolios/{vid}/export.lp")
    assert resp.status_code == 200
    assert resp.headers["content-type"].startswith("text/plain")
    exported = parse_lp_text(resp.text)
    direct = build_model(toy, expand(toy))
    assert models_equivalent(exported, direct)
    assert resp.text == lp_text(direct)


def test_store_survives_restart(tmp_path, toy_doc):
    store = tmp_path / "store"
    svc = WorkshopService(store)
    client = TestClient(build_app(svc))
    vid = ingest(client, toy_doc)
    job = run_optimize(client, vid)

    reborn = TestClient(build_app(WorkshopService(store)))
    assert reborn.get(f"/portfolios/{vid}").json()["document"] == toy_doc
    again = reborn.get(f"/jobs/{job['job_id']}").json()
    assert again["state"] == "done"
    assert again["result"]["value"] == pytest.approx(0.9)


def test_interrupted_jobs_fail_on_reload(tmp_path):
    store = tmp_path / "store"
    (store / "jobs").mkdir(parents=True)
    (store / "versions").mkdir()
    (store / "jobs" / "j-x.json").write_text(json.dumps({
        "job_id": "j-x", "version_id": "v-x", "created_at": "now",
        "options": {}, "state": "running", "result": None, "error": None}))
    svc = WorkshopService(store)
    rec = svc.get_job("j-x")
    assert rec["state"] == "failed"
    assert "restart" in rec["error"]
