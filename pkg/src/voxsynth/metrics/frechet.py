"""Frechet distance between Gaussian fits of two feature sets.

d^2 = |mu_a - mu_b|^2 + tr(Sigma_a + Sigma_b - 2 (Sigma_a Sigma_b)^(1/2))

The matrix square root trace is computed through the symmetric product
A^(1/2) Sigma_b A^(1/2) with A = Sigma_a, so only eigendecompositions of
symmetric PSD matrices are needed. Near-singular covariances are regularized
with eps * I on both sides and the regularization is reported.

The feature extractor is pluggable; the default turns each slice into a
small grid of block means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

REGULARIZATION_EPS = 1e-6


@dataclass(frozen=True)
class FrechetInfo:
    value: float
    regularized: bool
    eps: float


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def gaussian_fit(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2:
        raise DomainError(f"features must be (n, d), got shape {f.shape}")
    if f.shape[0] <= f.shape[1]:
        raise DomainError(
            f"need more samples than feature dims, got n={f.shape[0]}, d={f.shape[1]}"
        )
    mu = f.mean(axis=0)
    sigma = np.cov(f, rowvar=False)
    sigma = np.atleast_2d(sigma)
    return mu, sigma


def frechet_gaussian_info(features_a, features_b, eps: float = REGULARIZATION_EPS) -> FrechetInfo:
    mu_a, sig_a = gaussian_fit(features_a)
    mu_b, sig_b = gaussian_fit(features_b)
    if mu_a.shape != mu_b.shape:
        raise DomainError(f"feature dims differ: {mu_a.shape} vs {mu_b.shape}")

    regularized = False
    min_eig = min(np.linalg.eigvalsh(sig_a).min(), np.linalg.eigvalsh(sig_b).min())
    if min_eig < eps:
        sig_a = sig_a + eps * np.eye(sig_a.shape[0])
        sig_b = sig_b + eps * np.eye(sig_b.shape[0])
        regularized = True

    root_a = _psd_sqrt(sig_a)
    inner = root_a @ sig_b @ root_a
    tr_sqrt = float(np.sum(np.sqrt(np.clip(np.linalg.eigvalsh((inner + inner.T) / 2.0), 0.0, None))))
    d2 = float(np.sum((mu_a - mu_b) ** 2) + np.trace(sig_a) + np.trace(sig_b) - 2.0 * tr_sqrt)
    return FrechetInfo(value=max(d2, 0.0), regularized=regularized, eps=eps)


def frechet_gaussian(features_a, features_b, eps: float = REGULARIZATION_EPS) -> float:
    return frechet_gaussian_info(features_a, features_b, eps).value


def downsampled_pixel_features(slices, grid: tuple[int, int] = (4, 4)) -> np.ndarray:
    """Default feature extractor: per-slice block means on a coarse grid."""
    gh, gw = grid
    feats = []
    for s in slices:
        s = np.asarray(s, dtype=np.float64)
        h = (s.shape[0] // gh) * gh
        w = (s.shape[1] // gw) * gw
        if h == 0 or w == 0:
            raise DomainError(f"slice {s.shape} smaller than feature grid {grid}")
        blocks = s[:h, :w].reshape(gh, h // gh, gw, w // gw)
        feats.append(blocks.mean(axis=(1, 3)).ravel())
    return np.stack(feats)
