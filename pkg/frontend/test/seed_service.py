"""Seed a service data root for the frontend integration tests.

Creates three phantoms, a tiny trained checkpoint, a deterministic 4x4
fixture volume, and the service-rendered golden pixels for that fixture.

Usage: python3 seed_service.py <data_root> <golden_dir>
"""

import json
import sys

import numpy as np

from voxsynth import anatomy, metrics, priors, volumes
from voxsynth.diffusion import ConvDenoiser, TrainConfig, build_schedule, save_checkpoint, train
from voxsynth.service import render_slice_png


def main(data_root, golden_dir):
    import os

    for sub in ("subjects", "priors", "generated", "checkpoints"):
        os.makedirs(os.path.join(data_root, sub), exist_ok=True)
    os.makedirs(golden_dir, exist_ok=True)

    spec = anatomy.PhantomSpec(dims=(32, 32, 2))
    for seed in (1, 2, 3):
        vol, sid = anatomy.generate_phantom(seed, spec)
        volumes.write_volume(os.path.join(data_root, "subjects", f"{sid}.svol"), vol)

    # tiny checkpoint so /api/sample has something to run
    table = priors.default_tissue_table()
    vol, _ = anatomy.generate_phantom(1, spec)
    ct = priors.simulate_ct(vol, table)
    norm = volumes.normalize(ct, metrics.CT_WINDOW)
    dataset = [(norm.data[z].astype(float), norm.data[z].astype(float)) for z in range(2)]
    net = ConvDenoiser(base_channels=4, emb_dim=8, seed=0)
    sched_T = 8
    train(net, dataset, TrainConfig(epochs=2, batch_size=2, seed=0), build_schedule(sched_T))
    save_checkpoint(
        os.path.join(data_root, "checkpoints", "tiny.vckpt"),
        net,
        {"T": sched_T, "beta_start": 1e-4, "beta_end": 0.02},
        {"model_init": 0, "train": 0},
    )

    # 4x4 fixture with known values; golden = the service's own rendering
    values = np.array(
        [
            [-1024.0, -500.0, 0.0, 288.0],
            [100.0, 555.5, 1600.0, 1700.0],
            [-200.0, 40.0, 60.0, 700.0],
            [3000.0, -1000.0, 20.0, -76.0],
        ],
        dtype=np.float32,
    )
    fixture = volumes.scalar_volume(
        values[None], (1, 1, 1), volumes.Modality.CT_HU, (-1024, 3000)
    )
    volumes.write_volume(os.path.join(data_root, "priors", "fixture-4x4.svol"), fixture)

    lo, hi = -1024.0, 1600.0
    png = render_slice_png(fixture, 0, lo, hi)
    with open(os.path.join(golden_dir, "slice_4x4.png"), "wb") as f:
        f.write(png)
    pixels = np.rint(
        (np.clip(values.astype(np.float64), lo, hi) - lo) / (hi - lo) * 255.0
    ).astype(int)
    with open(os.path.join(golden_dir, "slice_4x4.json"), "w") as f:
        json.dump(
            {"window": [lo, hi], "width": 4, "height": 4,
             "pixels": pixels.ravel().tolist()},
            f,
            indent=2,
        )
    print("seeded", data_root)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
