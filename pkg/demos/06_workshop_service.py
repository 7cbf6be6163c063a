"""
The workshop service: versions, edits, jobs
===========================================

The HTTP layer wraps a version store: ingesting a document creates a
root version, each edit batch forks a child, optimize jobs run on
threads against a clone. This demo drives the service object directly;
`python -m optfolio.service --store ./workshop-store` serves the same
operations over HTTP (POST /portfolios, POST /portfolios/{id}/edits,
POST /portfolios/{id}/optimize, GET /jobs/{id}, ...).
"""

import importlib.util
import pathlib
import tempfile
import time

from optfolio.io import to_document
from optfolio.service import WorkshopService

spec = importlib.util.spec_from_file_location(
    "demo01", pathlib.Path(__file__).with_name("01_build_and_solve.py"))
demo01 = importlib.util.module_from_spec(spec)
spec.loader.exec_module(demo01)

service = WorkshopService(tempfile.mkdtemp())

root = service.ingest(to_document(demo01.instance))
print("root version:", root["version_id"])

# Fork with one batch of edits: disable the big option, mandate the
# training option. The root version is immutable.
child = service.apply_edits(root["version_id"], [
    {"action": "disable_option", "option_key": "F2.1"},
    {"action": "mandate_option", "option_key": "F2.2"},
])
print("edited fork:", child["version_id"], "parent:", child["parent_id"])

job = service.optimize(child["version_id"], {"gap_tolerance": 0.0})
while service.get_job(job["job_id"])["state"] not in ("done", "failed"):
    time.sleep(0.02)

result = service.get_job(job["job_id"])["result"]
print(f"\njob {job['job_id']}: {result['status']}, value {result['value']}")
print("selected options:",
      ", ".join(o["option_key"] for o in result["selected_options"]))
print("spend by year:", {row["year"]: row["spend"] for row in result["spend"]})

# The source version still holds the un-edited document.
fresh = service.get_version(root["version_id"])["document"]
flags = {o["option_key"]: o["disabled"] for o in fresh["options"]}
print("\nroot version untouched; F2.1 still enabled there:", not flags["F2.1"])
