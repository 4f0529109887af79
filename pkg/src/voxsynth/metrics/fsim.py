"""Feature similarity index: phase congruency + gradient magnitude.

Phase congruency comes from a log-Gabor bank (4 scales x 4 orientations,
minimum wavelength 6, scale multiplier 2, sigmaOnf 0.55): per orientation the
coherent energy |sum of scale responses| is divided by the summed response
amplitudes, then orientations are pooled. Gradients use the Scharr operator.
Pointwise similarities S_PC and S_G (exponents 1) are combined and averaged
with max(PC1, PC2) weights.

Both inputs are jointly rescaled to [0, 255] first, so the stability
constants T1 = 0.85 and T2 = 160 keep their documented meaning and applying
one affine intensity map to both inputs cannot change the score.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import DomainError, ShapeError

N_SCALES = 4
N_ORIENTS = 4
MIN_WAVELENGTH = 6.0
SCALE_MULT = 2.0
SIGMA_ONF = 0.55
D_THETA_ON_SIGMA = 1.2
T1 = 0.85
T2 = 160.0

_SCHARR_X = np.array([[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]]) / 16.0
_SCHARR_Y = _SCHARR_X.T

_bank_cache: dict[tuple[int, int], list[np.ndarray]] = {}


def _log_gabor_bank(shape) -> list[np.ndarray]:
    """Frequency-domain filters, one per (scale, orientation), cached by shape."""
    if shape in _bank_cache:
        return _bank_cache[shape]
    rows, cols = shape
    fy = np.fft.fftfreq(rows)[:, None]
    fx = np.fft.fftfreq(cols)[None, :]
    radius = np.hypot(fx, fy)
    radius[0, 0] = 1.0  # avoid log(0) at DC; the filters are zeroed there anyway
    theta = np.arctan2(-fy, fx)

    # low-pass keeps the highest-frequency filters from wrapping at Nyquist
    lowpass = 1.0 / (1.0 + (radius / 0.45) ** 30)

    radials = []
    for s in range(N_SCALES):
        f0 = 1.0 / (MIN_WAVELENGTH * SCALE_MULT**s)
        lg = np.exp(-(np.log(radius / f0) ** 2) / (2.0 * np.log(SIGMA_ONF) ** 2))
        lg *= lowpass
        lg[0, 0] = 0.0
        radials.append(lg)

    sigma_theta = (np.pi / N_ORIENTS) / D_THETA_ON_SIGMA
    spreads = []
    for o in range(N_ORIENTS):
        angle = o * np.pi / N_ORIENTS
        d = np.arctan2(np.sin(theta - angle), np.cos(theta - angle))
        spreads.append(np.exp(-(d**2) / (2.0 * sigma_theta**2)))

    bank = [r * s for s in spreads for r in radials]
    _bank_cache[shape] = bank
    return bank


def phase_congruency(img: np.ndarray) -> np.ndarray:
    """Amplitude-normalized phase congruency map in [0, 1]."""
    img = np.asarray(img, dtype=np.float64)
    spectrum = np.fft.fft2(img)
    bank = _log_gabor_bank(img.shape)
    energy_total = np.zeros(img.shape)
    amplitude_total = np.zeros(img.shape)
    for o in range(N_ORIENTS):
        sum_re = np.zeros(img.shape)
        sum_im = np.zeros(img.shape)
        amp = np.zeros(img.shape)
        for s in range(N_SCALES):
            resp = np.fft.ifft2(spectrum * bank[o * N_SCALES + s])
            sum_re += resp.real
            sum_im += resp.imag
            amp += np.abs(resp)
        energy_total += np.hypot(sum_re, sum_im)
        amplitude_total += amp
    return energy_total / (amplitude_total + 1e-8)


def scharr_gradient(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    gx = ndimage.correlate(img, _SCHARR_X, mode="reflect")
    gy = ndimage.correlate(img, _SCHARR_Y, mode="reflect")
    return np.hypot(gx, gy)


def fsim(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if min(a.shape) < 32:
        raise DomainError(f"fsim needs min dimension >= 32, got {a.shape}")

    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi > lo:
        scale = 255.0 / (hi - lo)
        a = (a - lo) * scale
        b = (b - lo) * scale
    else:
        return 1.0  # both constant and equal

    pc1, pc2 = phase_congruency(a), phase_congruency(b)
    g1, g2 = scharr_gradient(a), scharr_gradient(b)
    s_pc = (2.0 * pc1 * pc2 + T1) / (pc1**2 + pc2**2 + T1)
    s_g = (2.0 * g1 * g2 + T2) / (g1**2 + g2**2 + T2)
    s = s_pc * s_g
    pcm = np.maximum(pc1, pc2)
    w = pcm.sum()
    if w <= 1e-12:
        return float(s.mean())
    return float((s * pcm).sum() / w)
