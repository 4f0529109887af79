"""Mann-Whitney U rank test.

Returns (U, p_two_sided) where U counts pairs with a > b (ties at 1/2). Small
samples (both n <= 8) get an exact two-sided p from the permutation
distribution of U conditional on the pooled observed values; larger samples
use the normal approximation with tie correction and continuity correction.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy.stats import rankdata

from ..errors import DomainError

EXACT_MAX_N = 8


def mann_whitney_u(sample_a, sample_b) -> tuple[float, float]:
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise DomainError("both samples must be non-empty")
    ranks = rankdata(np.concatenate([a, b]))
    r1 = float(ranks[:n1].sum())
    u = r1 - n1 * (n1 + 1) / 2.0  # pairs with a > b, ties counted 1/2

    if n1 <= EXACT_MAX_N and n2 <= EXACT_MAX_N:
        p = _exact_two_sided_p(ranks, n1, n2, u)
    else:
        p = _normal_two_sided_p(ranks, n1, n2, u)
    return u, p


def _exact_two_sided_p(ranks: np.ndarray, n1: int, n2: int, u_obs: float) -> float:
    """Enumerate all C(n1+n2, n1) group assignments of the pooled ranks."""
    mu = n1 * n2 / 2.0
    dev = abs(u_obs - mu)
    offset = n1 * (n1 + 1) / 2.0
    extreme = 0
    total = 0
    for idx in combinations(range(n1 + n2), n1):
        u = sum(ranks[i] for i in idx) - offset
        if abs(u - mu) >= dev - 1e-9:
            extreme += 1
        total += 1
    return extreme / total


def _normal_two_sided_p(ranks: np.ndarray, n1: int, n2: int, u: float) -> float:
    n = n1 + n2
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    sigma2 = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma2 <= 0:
        return 1.0  # all pooled values identical
    mu = n1 * n2 / 2.0
    z = max(abs(u - mu) - 0.5, 0.0) / math.sqrt(sigma2)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))
