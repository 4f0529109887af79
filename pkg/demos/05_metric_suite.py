"""Exercise the full metric suite on degraded copies of a phantom CT prior.

Run:  python3 demos/05_metric_suite.py
"""

import os

import numpy as np

from voxsynth import anatomy, metrics, priors

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

vol, _ = anatomy.generate_phantom(seed=5)
ct = priors.simulate_ct(vol, priors.default_tissue_table())
ref = ct.data[1].astype(np.float64)
rng = np.random.default_rng(0)
L = metrics.CT_DYNAMIC_RANGE

print(f"{'noise std':>10} {'SSIM':>8} {'PSNR':>8} {'MAE':>8} {'HistCC':>8} {'FSIM':>8}")
for sigma in (0.0, 20.0, 80.0, 200.0):
    deg = ref + rng.normal(0, sigma, ref.shape)
    row = (
        metrics.ssim(deg, ref, L),
        metrics.psnr(deg, ref, L),
        metrics.mae(deg, ref),
        metrics.hist_cc(deg, ref, bins=64, value_range=metrics.CT_WINDOW),
        metrics.fsim(deg, ref),
    )
    print(f"{sigma:>10.0f} {row[0]:>8.4f} {row[1]:>8.2f} {row[2]:>8.2f} "
          f"{row[3]:>8.4f} {row[4]:>8.4f}")

# Dice over organ masks of two phantoms
other, _ = anatomy.generate_phantom(seed=6)
for cid, name in ((anatomy.LIVER, "liver"), (anatomy.KIDNEY, "kidney")):
    d_self = metrics.dice(vol.data == cid, vol.data == cid)
    d_cross = metrics.dice(vol.data == cid, other.data == cid)
    print(f"dice {name}: self {d_self:.3f}, across phantoms {d_cross:.3f}")

# Mann-Whitney U on two metric populations
a = rng.normal(0.85, 0.03, 20)
b = rng.normal(0.90, 0.03, 20)
u, p = metrics.mann_whitney_u(a, b)
print(f"Mann-Whitney U={u:.1f}, two-sided p={p:.5f} (distinct populations)")

# Frechet distance needs more slices than feature dims, so pool slices
# from two disjoint batches of phantoms
slices_a, slices_b = [], []
for seed in range(10, 30):
    v, _ = anatomy.generate_phantom(seed)
    c = priors.simulate_ct(v, priors.default_tissue_table())
    (slices_a if seed < 20 else slices_b).extend(list(c.data))
fa = metrics.downsampled_pixel_features(slices_a, grid=(2, 2))
fb = metrics.downsampled_pixel_features(slices_b, grid=(2, 2))
print(f"Frechet distance between phantom batches: {metrics.frechet_gaussian(fa, fb):.3f}")
