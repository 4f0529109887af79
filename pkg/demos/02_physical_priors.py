"""Turn one phantom into every supported physical prior and plot how the
signal models respond to sequence parameters.

Run:  python3 demos/02_physical_priors.py
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from voxsynth import anatomy, priors

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

vol, subject_id = anatomy.generate_phantom(seed=3)
table = priors.default_tissue_table()
presets = priors.load_sequence_presets()

# One prior per preset. CT stays in Hounsfield units; MR sequences are
# display-scaled to [0, 255] by the table-wide maximum signal.
fig, axes = plt.subplots(2, 4, figsize=(13, 6.5))
for ax, (name, params) in zip(axes.ravel(), sorted(presets.items())):
    prior = priors.simulate_prior(vol, table, params)
    ax.imshow(prior.data[1], cmap="gray", interpolation="nearest")
    ax.set_title(f"{name} [{prior.data.min():.0f}, {prior.data.max():.0f}]")
    ax.axis("off")
axes.ravel()[-1].axis("off")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_priors.png"), dpi=120)
print("figure: demos/out/02_priors.png")

# Signal curves per tissue. Longer TR recovers more longitudinal
# magnetization (signal rises); longer TE lets more transverse decay happen
# (signal falls). These two monotonicities are pinned by the test suite.
tissues = [table[c] for c in (1, 2, 4, 5, 8)]  # soft tissue, fat, liver, kidney, blood
trs = np.linspace(1, 3000, 200)
tes = np.linspace(0, 300, 200)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
for row in tissues:
    ax1.plot(trs, [priors.gre_signal(row.t1_ms, row.rho, tr, 30.0) for tr in trs],
             label=row.name)
    ax2.plot(tes, [priors.space_signal(row.t2_ms, row.rho, te) for te in tes],
             label=row.name)
ax1.set_xlabel("TR (ms)")
ax1.set_ylabel("gradient-echo signal")
ax2.set_xlabel("TE (ms)")
ax2.set_ylabel("spin-echo signal")
ax1.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_signal_curves.png"), dpi=120)
print("figure: demos/out/02_signal_curves.png")

# Opposed-phase fat cancellation: at fat fraction 0.5 the water and fat
# contributions cancel exactly.
ffs = np.linspace(0, 1, 101)
popp = presets["vibe_opp"]
vals = [priors.vibe_signal(343.0, 1.0, ff, popp) for ff in ffs]
fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot(ffs, vals)
ax.set_xlabel("fat fraction")
ax.set_ylabel("opposed-phase signal")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_opposed_phase.png"), dpi=120)
print("figure: demos/out/02_opposed_phase.png")
