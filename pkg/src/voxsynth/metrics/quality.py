"""Reference-free and full-reference slice quality metrics.

SSIM uses the canonical 11x11 Gaussian window (sigma 1.5) with stability
constants C1 = (0.01 L)^2 and C2 = (0.03 L)^2 for dynamic range L, computed
at every pixel with reflected borders and averaged. PSNR reports +inf when
the images are identical. Dice of two empty masks is 1 by convention.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from ..errors import DegenerateError, DomainError, ShapeError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a, b, dynamic_range: float) -> float:
    a, b = _check_pair(a, b)
    if dynamic_range <= 0:
        raise DomainError(f"dynamic_range must be > 0, got {dynamic_range}")
    w = gaussian_window()
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2

    def f(x):
        return ndimage.correlate(x, w, mode="reflect")

    mu_a, mu_b = f(a), f(b)
    var_a = f(a * a) - mu_a**2
    var_b = f(b * b) - mu_b**2
    cov = f(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def psnr(a, b, peak: float) -> float:
    a, b = _check_pair(a, b)
    if peak <= 0:
        raise DomainError(f"peak must be > 0, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def mae(a, b) -> float:
    a, b = _check_pair(a, b)
    return float(np.mean(np.abs(a - b)))


def pearson_cc(x, y) -> float:
    """Pearson correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {y.shape}")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt(np.sum(xd**2))
    sy = np.sqrt(np.sum(yd**2))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateError("zero-variance input to Pearson correlation")
    return float(np.sum(xd * yd) / (sx * sy))


def hist_cc(a, b, bins: int = 64, value_range: tuple[float, float] | None = None) -> float:
    """Pearson correlation of the two images' binned intensity counts."""
    a, b = _check_pair(a, b)
    if bins < 2:
        raise DomainError(f"bins must be >= 2, got {bins}")
    if value_range is None:
        lo = min(a.min(), b.min())
        hi = max(a.max(), b.max())
        if hi == lo:
            hi = lo + 1.0
        value_range = (lo, hi)
    ca, _ = np.histogram(a, bins=bins, range=value_range)
    cb, _ = np.histogram(b, bins=bins, range=value_range)
    return pearson_cc(ca, cb)


def dice(a, b) -> float:
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0  # identical (empty) segmentations
    return 2.0 * int(np.logical_and(a, b).sum()) / total
