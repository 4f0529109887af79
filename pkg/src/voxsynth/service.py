"""HTTP service backing the browser UI.

Artifacts live under a data root as plain .svol/.vckpt files (no database):

    <data_root>/subjects/*.svol      label volumes (inputs and composites)
    <data_root>/priors/*.svol        simulated prior volumes
    <data_root>/generated/*.svol     sampled volumes
    <data_root>/checkpoints/*.vckpt  trained denoisers

Volume and checkpoint ids are file stems. Compose/simulate respond
synchronously (cheap at desk scale); sampling runs on a single-worker job
queue, which also serializes mutations. Artifact ids are deterministic
digests of the request, so repeating a request rewrites the same bytes.

Error contract: 400 schema violation (with field path), 404 unknown id,
409 duplicate submission of an identical active job.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import __version__, anatomy, metrics, priors, volumes
from .diffusion import load_checkpoint, sample as sample_slice
from .errors import VoxsynthError
from .volumes import Modality

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")

JOB_KINDS = ("simulate", "compose", "train", "sample", "eval")
JOB_STATUSES = ("queued", "running", "done", "failed")


@dataclass
class JobRecord:
    job_id: str
    kind: str
    status: str = "queued"
    inputs_digest: str = ""
    output_paths: list[str] = field(default_factory=list)
    output_ids: list[str] = field(default_factory=list)
    error: str = ""
    created_at: float = 0.0
    started_at: float | None = None
    finished_at: float | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "inputs_digest": self.inputs_digest,
            "output_paths": list(self.output_paths),
            "output_ids": list(self.output_ids),
            "error": self.error,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


class JobQueue:
    """In-process queue; one worker so mutations are serialized."""

    def __init__(self):
        self._pool = ThreadPoolExecutor(max_workers=1)
        self._lock = threading.Lock()
        self._jobs: dict[str, JobRecord] = {}
        self._active_digests: dict[str, str] = {}
        self._n = 0

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self._jobs.get(job_id)

    def submit(self, kind: str, inputs_digest: str, fn) -> JobRecord:
        with self._lock:
            existing = self._active_digests.get(inputs_digest)
            if existing is not None:
                raise HTTPException(
                    status_code=409,
                    detail=f"identical job {existing} is already {self._jobs[existing].status}",
                )
            self._n += 1
            job = JobRecord(
                job_id=f"job-{self._n:04d}",
                kind=kind,
                inputs_digest=inputs_digest,
                created_at=time.time(),
            )
            self._jobs[job.job_id] = job
            self._active_digests[inputs_digest] = job.job_id

        def run():
            with self._lock:
                assert job.status == "queued"
                job.status = "running"
                job.started_at = time.time()
            try:
                paths, ids = fn()
                with self._lock:
                    job.output_paths = paths
                    job.output_ids = ids
                    job.status = "done"
            except Exception as e:  # recorded, never crashes the worker
                with self._lock:
                    job.status = "failed"
                    job.error = str(e)
            finally:
                with self._lock:
                    job.finished_at = time.time()
                    self._active_digests.pop(inputs_digest, None)

        self._pool.submit(run)
        return job


# --------------------------------------------------------------------------
# request schemas


class RecipeEntryModel(BaseModel):
    organ_class_id: int
    source_subject_id: str


class RecipeModel(BaseModel):
    entries: list[RecipeEntryModel]
    contour_source: str
    conflict_policy: str = "priority_order"


class ComposeRequest(BaseModel):
    recipe: RecipeModel


class SimulateRequest(BaseModel):
    subject_id: str
    kind: str
    tr_ms: float | None = None
    te_ms: float | None = None
    flip_deg: float | None = None


class SampleRequest(BaseModel):
    prior_id: str
    checkpoint_id: str
    seed: int = 0


class EvalRequest(BaseModel):
    pred_id: str
    ref_id: str
    hist_bins: int = Field(default=64, ge=2)


class Store:
    def __init__(self, data_root):
        self.root = str(data_root)
        for sub in ("subjects", "priors", "generated", "checkpoints"):
            os.makedirs(os.path.join(self.root, sub), exist_ok=True)

    def _dir(self, kind: str) -> str:
        return os.path.join(self.root, kind)

    def list_ids(self, kind: str, suffix: str = ".svol") -> list[str]:
        return sorted(
            f[: -len(suffix)]
            for f in os.listdir(self._dir(kind))
            if f.endswith(suffix)
        )

    def volume_path(self, vol_id: str) -> str:
        if not _ID_RE.match(vol_id):
            raise HTTPException(status_code=404, detail=f"unknown volume {vol_id!r}")
        for kind in ("subjects", "priors", "generated"):
            p = os.path.join(self._dir(kind), vol_id + ".svol")
            if os.path.exists(p):
                return p
        raise HTTPException(status_code=404, detail=f"unknown volume {vol_id!r}")

    def checkpoint_path(self, ckpt_id: str) -> str:
        if not _ID_RE.match(ckpt_id):
            raise HTTPException(status_code=404, detail=f"unknown checkpoint {ckpt_id!r}")
        p = os.path.join(self._dir("checkpoints"), ckpt_id + ".vckpt")
        if not os.path.exists(p):
            raise HTTPException(status_code=404, detail=f"unknown checkpoint {ckpt_id!r}")
        return p

    def load_volume(self, vol_id: str):
        return volumes.read_volume(self.volume_path(vol_id))

    def save(self, kind: str, vol_id: str, volume) -> str:
        path = os.path.join(self._dir(kind), vol_id + ".svol")
        volumes.write_volume(path, volume)
        return path


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:12]


def _volume_meta(vol_id: str, v) -> dict:
    kind = "label" if isinstance(v, volumes.LabelVolume) else v.modality.name.lower()
    return {"id": vol_id, "dims": list(v.dims), "spacing": list(v.spacing), "kind": kind}


def render_slice_png(v, z: int, lo: float, hi: float) -> bytes:
    """Window/level then 8-bit quantization (round-half-even), lossless PNG."""
    from PIL import Image

    if isinstance(v, volumes.LabelVolume):
        data = v.data[z].astype(np.float64)
        peak = max(1.0, float(v.data.max()))  # volume-wide, stable across z
        scaled = data / peak * 255.0
    else:
        if hi <= lo:
            raise HTTPException(status_code=400, detail="window hi must exceed lo")
        data = np.clip(v.data[z].astype(np.float64), lo, hi)
        scaled = (data - lo) / (hi - lo) * 255.0
    img = np.rint(scaled).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(img, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def create_app(data_root) -> FastAPI:
    app = FastAPI(title="voxsynth service", version=__version__)
    store = Store(data_root)
    jobs = JobQueue()
    table = priors.default_tissue_table()
    presets = priors.load_sequence_presets()

    @app.exception_handler(RequestValidationError)
    async def schema_violation(_req: Request, exc: RequestValidationError):
        detail = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.exception_handler(VoxsynthError)
    async def domain_error(_req: Request, exc: VoxsynthError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/api/tissues")
    def get_tissues():
        rows = [
            {
                "class_id": r.class_id,
                "name": r.name,
                "hu": r.hu,
                "t1_ms": r.t1_ms,
                "t2_ms": r.t2_ms,
                "rho": r.rho,
                "fat_fraction": r.fat_fraction,
            }
            for r in (table[cid] for cid in table.class_ids())
        ]
        return {"version": table.version, "rows": rows}

    @app.get("/api/subjects")
    def get_subjects():
        out = {"subjects": [], "priors": [], "generated": []}
        for kind in ("subjects", "priors", "generated"):
            for vol_id in store.list_ids(kind):
                v = volumes.read_volume(os.path.join(store._dir(kind), vol_id + ".svol"))
                out[kind].append(_volume_meta(vol_id, v))
        out["checkpoints"] = store.list_ids("checkpoints", ".vckpt")
        return out

    @app.get("/api/slice")
    def get_slice(vol: str, z: int = 0, lo: float = -1024.0, hi: float = 1600.0):
        v = store.load_volume(vol)
        if not 0 <= z < v.n_slices:
            raise HTTPException(
                status_code=400, detail=f"z {z} outside [0, {v.n_slices - 1}]"
            )
        png = render_slice_png(v, z, lo, hi)
        return Response(content=png, media_type="image/png")

    @app.post("/api/compose")
    def post_compose(req: ComposeRequest):
        recipe = anatomy.CompositionRecipe.from_json_dict(req.recipe.model_dump())
        subjects = {}
        for sid in [recipe.contour_source] + [s for _, s in recipe.entries]:
            if sid not in subjects:
                v = store.load_volume(sid)
                if not isinstance(v, volumes.LabelVolume):
                    raise HTTPException(status_code=400, detail=f"{sid!r} is not a label volume")
                subjects[sid] = v
        result = anatomy.compose_anatomy(subjects, recipe)
        new_id = result.volume.subject_id
        store.save("subjects", new_id, result.volume)
        return {"subject_id": new_id}

    @app.post("/api/simulate")
    def post_simulate(req: SimulateRequest):
        if req.kind not in presets:
            raise HTTPException(
                status_code=400, detail=f"unknown kind {req.kind!r} (have {sorted(presets)})"
            )
        v = store.load_volume(req.subject_id)
        if not isinstance(v, volumes.LabelVolume):
            raise HTTPException(status_code=400, detail=f"{req.subject_id!r} is not a label volume")
        base = presets[req.kind]
        seq = priors.SequenceParams(
            kind=base.kind,
            tr_ms=req.tr_ms if req.tr_ms is not None else base.tr_ms,
            te_ms=req.te_ms if req.te_ms is not None else base.te_ms,
            flip_deg=req.flip_deg if req.flip_deg is not None else base.flip_deg,
        )
        prior = priors.simulate_prior(v, table, seq)
        prior_id = f"prior-{_digest(req.model_dump())}"
        store.save("priors", prior_id, prior)
        return {"prior_id": prior_id}

    @app.post("/api/sample")
    def post_sample(req: SampleRequest):
        prior_path = store.volume_path(req.prior_id)
        ckpt_path = store.checkpoint_path(req.checkpoint_id)

        def run():
            model, sched, _ = load_checkpoint(ckpt_path)
            prior = volumes.read_volume(prior_path)
            window = _window_for(prior)
            out = []
            for z in range(prior.n_slices):
                y = volumes.normalize_array(prior.slice_at(z), window)
                x0 = sample_slice(model, y, sched, rng_seed=req.seed + z)
                out.append(volumes.denormalize_array(x0, window))
            gen = volumes.scalar_volume(
                np.stack(out), prior.spacing, prior.modality, window
            )
            gen_id = f"gen-{_digest(req.model_dump())}"
            path = store.save("generated", gen_id, gen)
            return [path], [gen_id]

        job = jobs.submit("sample", _digest(["sample", req.model_dump()]), run)
        return {"job_id": job.job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job.to_dict()

    @app.post("/api/eval")
    def post_eval(req: EvalRequest):
        pred = store.load_volume(req.pred_id)
        ref = store.load_volume(req.ref_id)
        if not isinstance(pred, volumes.ScalarVolume) or not isinstance(ref, volumes.ScalarVolume):
            raise HTTPException(status_code=400, detail="eval needs scalar volumes")
        report = metrics.evaluate_volume_pair(
            pred, ref, hist_bins=req.hist_bins, dataset_tag=f"{req.pred_id}-vs-{req.ref_id}"
        )
        return metrics.report_to_json_dict(report)

    return app


def _window_for(v) -> tuple[float, float]:
    if v.modality == Modality.CT_HU:
        return metrics.CT_WINDOW
    if v.modality == Modality.NORMALIZED:
        return (-1.0, 1.0)
    return v.value_range
