"""Train the desk denoiser on a handful of phantom CT priors, then sample
conditioned on an unseen prior. Small settings so the demo finishes in
about a minute; the acceptance suite runs the full desk-scale version.

Run:  python3 demos/04_train_and_sample.py
"""

import os
import time

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from voxsynth import anatomy, metrics, priors, volumes
from voxsynth.diffusion import ConvDenoiser, TrainConfig, build_schedule, sample, train

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

table = priors.default_tissue_table()
window = metrics.CT_WINDOW
spec = anatomy.PhantomSpec(dims=(32, 32, 4))

# Training pairs: the normalized CT prior conditions the model (channel 1)
# and also serves as the clean target, so sampling should redraw the prior.
dataset = []
for seed in range(8):
    vol, _ = anatomy.generate_phantom(seed, spec)
    norm = volumes.normalize(priors.simulate_ct(vol, table), window)
    for z in range(norm.n_slices):
        sl = norm.data[z].astype(np.float64)
        dataset.append((sl, sl))
print(f"{len(dataset)} training slices")

sched = build_schedule(100, 1e-4, 0.02)
net = ConvDenoiser(base_channels=8, emb_dim=16, seed=0, dtype=np.float32)
cfg = TrainConfig(epochs=50, batch_size=4, learning_rate=2e-3, seed=0)
t0 = time.perf_counter()
result = train(net, dataset, cfg, sched)
print(f"{result.n_steps} steps in {time.perf_counter() - t0:.1f}s; "
      f"loss {result.epoch_losses[0]:.3f} -> {result.epoch_losses[-1]:.3f}")

# Condition on a held-out phantom's prior.
held, _ = anatomy.generate_phantom(99, spec)
held_ct = priors.simulate_ct(held, table)
y = volumes.normalize(held_ct, window).data[1].astype(np.float64)
gen = sample(net, y, sched, rng_seed=7)
gen_hu = volumes.denormalize_array(gen, window)
ref_hu = held_ct.data[1].astype(np.float64)
score = metrics.ssim(gen_hu, ref_hu, window[1] - window[0])
print(f"SSIM(sample, prior) = {score:.3f}")

fig, axes = plt.subplots(1, 3, figsize=(10, 3.6))
axes[0].imshow(ref_hu, cmap="gray")
axes[0].set_title("conditioning prior (HU)")
axes[1].imshow(gen_hu, cmap="gray")
axes[1].set_title(f"sample (SSIM {score:.2f})")
axes[2].plot(result.epoch_losses)
axes[2].set_xlabel("epoch")
axes[2].set_ylabel("mean loss")
axes[0].axis("off")
axes[1].axis("off")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "04_train_sample.png"), dpi=120)
print("figure: demos/out/04_train_sample.png")
