import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from voxsynth import anatomy, metrics, priors, volumes
from voxsynth.diffusion import ConvDenoiser, TrainConfig, build_schedule, save_checkpoint, train
from voxsynth.service import create_app


@pytest.fixture(scope="module")
def data_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    (root / "subjects").mkdir()
    (root / "priors").mkdir()
    (root / "generated").mkdir()
    (root / "checkpoints").mkdir()
    spec = anatomy.PhantomSpec(dims=(32, 32, 2))
    for seed in (1, 2, 3):
        vol, sid = anatomy.generate_phantom(seed, spec)
        volumes.write_volume(root / "subjects" / f"{sid}.svol", vol)

    # tiny checkpoint trained on one phantom prior
    table = priors.default_tissue_table()
    vol, _ = anatomy.generate_phantom(1, spec)
    ct = priors.simulate_ct(vol, table)
    norm = volumes.normalize(ct, metrics.CT_WINDOW)
    dataset = [(norm.data[z].astype(float), norm.data[z].astype(float)) for z in range(2)]
    sched_T = 8
    net = ConvDenoiser(base_channels=4, emb_dim=8, seed=0)
    train(net, dataset, TrainConfig(epochs=2, batch_size=2, seed=0), build_schedule(sched_T))
    save_checkpoint(
        root / "checkpoints" / "tiny.vckpt", net,
        {"T": sched_T, "beta_start": 1e-4, "beta_end": 0.02},
        {"model_init": 0, "train": 0},
    )
    return root


@pytest.fixture(scope="module")
def client(data_root):
    return TestClient(create_app(data_root))


def wait_done(client, job_id, timeout=60.0):
    t0 = time.time()
    while time.time() - t0 < timeout:
        rec = client.get(f"/api/jobs/{job_id}").json()
        if rec["status"] in ("done", "failed"):
            return rec
        time.sleep(0.05)
    raise TimeoutError(job_id)


class TestTissues:
    def test_row_count_matches_shipped_table(self, client):
        body = client.get("/api/tissues").json()
        table = priors.default_tissue_table()
        assert len(body["rows"]) == len(table.class_ids())
        assert body["version"] == table.version
        by_id = {r["class_id"]: r for r in body["rows"]}
        assert by_id[0]["hu"] == -1000.0


class TestSubjects:
    def test_lists_label_volumes(self, client):
        body = client.get("/api/subjects").json()
        ids = [s["id"] for s in body["subjects"]]
        assert {"phantom-0001", "phantom-0002", "phantom-0003"} <= set(ids)
        assert body["checkpoints"] == ["tiny"]
        meta = body["subjects"][0]
        assert meta["kind"] == "label"
        assert meta["dims"] == [32, 32, 2]


class TestSlice:
    def test_png_round_trip_window(self, client, data_root):
        # golden check: windowed 8-bit quantization with round-half-even
        vol, _ = anatomy.generate_phantom(1, anatomy.PhantomSpec(dims=(32, 32, 2)))
        ct = priors.simulate_ct(vol, priors.default_tissue_table())
        volumes.write_volume(data_root / "priors" / "ct-fixture.svol", ct)
        r = client.get("/api/slice", params={"vol": "ct-fixture", "z": 0,
                                             "lo": -1024, "hi": 1600})
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        img = np.asarray(Image.open(io.BytesIO(r.content)))
        data = np.clip(ct.data[0].astype(np.float64), -1024, 1600)
        expect = np.rint((data + 1024) / 2624.0 * 255.0).astype(np.uint8)
        assert np.array_equal(img, expect)

    def test_unknown_volume_404(self, client):
        assert client.get("/api/slice", params={"vol": "nope", "z": 0}).status_code == 404

    def test_z_out_of_range_400(self, client):
        r = client.get("/api/slice", params={"vol": "phantom-0001", "z": 99})
        assert r.status_code == 400


class TestCompose:
    def test_single_source_equals_fuse(self, client, data_root):
        recipe = {
            "entries": [{"organ_class_id": int(c), "source_subject_id": "phantom-0001"}
                        for c in (2, 3, 4, 5, 6)],
            "contour_source": "phantom-0001",
            "conflict_policy": "priority_order",
        }
        r = client.post("/api/compose", json={"recipe": recipe})
        assert r.status_code == 200
        new_id = r.json()["subject_id"]
        saved = volumes.read_volume(data_root / "subjects" / f"{new_id}.svol")
        vol, _ = anatomy.generate_phantom(1, anatomy.PhantomSpec(dims=(32, 32, 2)))
        fused = anatomy.fuse_masks(vol, anatomy.body_mask_from_labels(vol))
        assert np.array_equal(saved.data, fused.data)

    def test_schema_violation_400_with_field_path(self, client):
        r = client.post("/api/compose", json={"recipe": {"entries": "nope"}})
        assert r.status_code == 400
        fields = [d["field"] for d in r.json()["detail"]]
        assert any("entries" in f for f in fields)

    def test_unknown_subject_404(self, client):
        recipe = {"entries": [{"organ_class_id": 4, "source_subject_id": "ghost"}],
                  "contour_source": "phantom-0001"}
        assert client.post("/api/compose", json={"recipe": recipe}).status_code == 404


class TestSimulateEndpoint:
    def test_prior_matches_library(self, client, data_root):
        r = client.post("/api/simulate", json={"subject_id": "phantom-0002", "kind": "ct"})
        assert r.status_code == 200
        prior_id = r.json()["prior_id"]
        saved = volumes.read_volume(data_root / "priors" / f"{prior_id}.svol")
        vol, _ = anatomy.generate_phantom(2, anatomy.PhantomSpec(dims=(32, 32, 2)))
        expect = priors.simulate_ct(vol, priors.default_tissue_table())
        assert saved == expect

    def test_unknown_kind_400(self, client):
        r = client.post("/api/simulate", json={"subject_id": "phantom-0001", "kind": "zap"})
        assert r.status_code == 400


class TestJobsAndEval:
    def test_full_flow_compose_simulate_sample_eval(self, client):
        recipe = {
            "entries": [{"organ_class_id": 4, "source_subject_id": "phantom-0002"},
                        {"organ_class_id": 5, "source_subject_id": "phantom-0003"}],
            "contour_source": "phantom-0001",
        }
        subject_id = client.post("/api/compose", json={"recipe": recipe}).json()["subject_id"]
        prior_id = client.post(
            "/api/simulate", json={"subject_id": subject_id, "kind": "ct"}
        ).json()["prior_id"]
        r = client.post("/api/sample", json={"prior_id": prior_id,
                                             "checkpoint_id": "tiny", "seed": 1})
        assert r.status_code == 200
        job = wait_done(client, r.json()["job_id"])
        assert job["status"] == "done"
        gen_id = job["output_ids"][0]
        body = client.post("/api/eval", json={"pred_id": gen_id, "ref_id": prior_id}).json()
        assert "ssim" in body["aggregate"]
        assert body["metadata"]["n_slices"] == 2

    def test_job_record_transitions(self, client):
        prior_id = client.post(
            "/api/simulate", json={"subject_id": "phantom-0001", "kind": "gre_t1"}
        ).json()["prior_id"]
        r = client.post("/api/sample", json={"prior_id": prior_id,
                                             "checkpoint_id": "tiny", "seed": 2})
        job_id = r.json()["job_id"]
        rec = wait_done(client, job_id)
        assert rec["kind"] == "sample"
        assert rec["created_at"] <= rec["started_at"] <= rec["finished_at"]

    def test_duplicate_submission_409(self, client):
        prior_id = client.post(
            "/api/simulate", json={"subject_id": "phantom-0003", "kind": "ct"}
        ).json()["prior_id"]
        # occupy the single worker so the duplicate is still queued when resubmitted
        blocker = client.post("/api/sample", json={"prior_id": prior_id,
                                                   "checkpoint_id": "tiny", "seed": 99})
        req = {"prior_id": prior_id, "checkpoint_id": "tiny", "seed": 77}
        first = client.post("/api/sample", json=req)
        second = client.post("/api/sample", json=req)
        assert first.status_code == 200
        assert second.status_code == 409
        wait_done(client, blocker.json()["job_id"])
        wait_done(client, first.json()["job_id"])

    def test_unknown_job_404(self, client):
        assert client.get("/api/jobs/job-9999").status_code == 404

    def test_eval_identical_pair_serializes_inf_sentinel(self, client):
        prior_id = client.post(
            "/api/simulate", json={"subject_id": "phantom-0002", "kind": "space_t2"}
        ).json()["prior_id"]
        r = client.post("/api/eval", json={"pred_id": prior_id, "ref_id": prior_id})
        assert r.status_code == 200
        body = r.json()
        psnr_vals = [d["value"] for d in body["per_slice"] if d["metric"] == "psnr"]
        assert all(v == "inf" for v in psnr_vals)
        assert body["metadata"]["infinite_counts"]["psnr"] == len(psnr_vals)

    def test_eval_unknown_id_404(self, client):
        r = client.post("/api/eval", json={"pred_id": "nope", "ref_id": "nope"})
        assert r.status_code == 404
