"""Versioned checkpoint format: one JSON header line, then raw f64 parameters.

Header fields: format version, architecture descriptor, schedule constants,
seed lineage (model init seed, training seed), parameter count, and the
SHA-256 of the payload so corruption is detected on load.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..errors import ParseError, ValidationError
from .denoiser import ConvDenoiser
from .schedule import NoiseSchedule, build_schedule

CHECKPOINT_VERSION = 1


def save_checkpoint(path, predictor: ConvDenoiser, sched_constants: dict,
                    seed_lineage: dict) -> None:
    params = predictor.parameters.astype("<f8")
    payload = params.tobytes()
    header = {
        "format": "voxsynth-checkpoint",
        "version": CHECKPOINT_VERSION,
        "architecture": predictor.architecture(),
        "schedule": dict(sched_constants),
        "seeds": dict(seed_lineage),
        "n_parameters": int(params.size),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        f.write(payload)


def load_checkpoint(path) -> tuple[ConvDenoiser, NoiseSchedule, dict]:
    with open(path, "rb") as f:
        line = f.readline()
        payload = f.read()
    try:
        header = json.loads(line)
    except json.JSONDecodeError:
        raise ParseError("checkpoint header is not valid JSON", 0) from None
    if header.get("format") != "voxsynth-checkpoint":
        raise ParseError("not a voxsynth checkpoint", 0)
    if header.get("version") != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {header.get('version')}", 0)
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise ValidationError("checkpoint payload hash mismatch")
    arch = header["architecture"]
    if arch.get("family") != "conv_unet3":
        raise ValidationError(f"unknown architecture family {arch.get('family')!r}")
    model = ConvDenoiser(
        base_channels=arch["base_channels"],
        emb_dim=arch["emb_dim"],
        seed=header["seeds"].get("model_init", 0),
        zero_init_head=arch.get("zero_init_head", True),
        dtype=np.dtype(arch.get("dtype", "float64")),
    )
    params = np.frombuffer(payload, dtype="<f8")
    if params.size != header["n_parameters"] or params.size != model.n_parameters:
        raise ValidationError(
            f"parameter count mismatch: payload {params.size}, model {model.n_parameters}"
        )
    model.set_parameters(params.astype(np.float64))
    s = header["schedule"]
    sched = build_schedule(int(s["T"]), float(s["beta_start"]), float(s["beta_end"]))
    return model, sched, header
