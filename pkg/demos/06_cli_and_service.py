"""Drive the same pipeline through the CLI (with manifests) and the HTTP API.

Run:  python3 demos/06_cli_and_service.py
"""

import json
import os
import tempfile

from fastapi.testclient import TestClient

from voxsynth import anatomy, volumes
from voxsynth.cli import main as cli
from voxsynth.service import create_app

with tempfile.TemporaryDirectory() as tmp:
    tmp = str(tmp)

    # CLI: every run writes a manifest; rerun verifies byte-identical outputs.
    phantom = os.path.join(tmp, "p.svol")
    ct = os.path.join(tmp, "ct.svol")
    assert cli(["phantom", "--seed", "1", "--out", phantom]) == 0
    assert cli(["simulate", "--labels", phantom, "--kind", "ct", "--out", ct]) == 0
    rc = cli(["rerun", "--manifest", ct + ".manifest.json",
              "--out-dir", os.path.join(tmp, "replay")])
    print("rerun exit code (0 = byte-identical):", rc)

    # Service: same artifacts over HTTP.
    data_root = os.path.join(tmp, "data")
    os.makedirs(os.path.join(data_root, "subjects"))
    for seed in (1, 2):
        vol, sid = anatomy.generate_phantom(seed)
        volumes.write_volume(os.path.join(data_root, "subjects", f"{sid}.svol"), vol)

    client = TestClient(create_app(data_root))
    print("tissue rows:", len(client.get("/api/tissues").json()["rows"]))
    print("subjects:", [s["id"] for s in client.get("/api/subjects").json()["subjects"]])

    recipe = {
        "entries": [
            {"organ_class_id": int(anatomy.LIVER), "source_subject_id": "phantom-0002"},
            {"organ_class_id": int(anatomy.KIDNEY), "source_subject_id": "phantom-0001"},
        ],
        "contour_source": "phantom-0001",
    }
    composite = client.post("/api/compose", json={"recipe": recipe}).json()["subject_id"]
    print("composed:", composite)
    prior = client.post("/api/simulate",
                        json={"subject_id": composite, "kind": "gre_t1"}).json()
    print("simulated prior:", prior["prior_id"])
    png = client.get("/api/slice", params={"vol": prior["prior_id"], "z": 1,
                                           "lo": 0, "hi": 255})
    print("slice render:", png.headers["content-type"], len(png.content), "bytes")
    report = client.post("/api/eval", json={"pred_id": prior["prior_id"],
                                            "ref_id": prior["prior_id"]}).json()
    print("self-eval SSIM:", report["aggregate"]["ssim"]["mean"])
