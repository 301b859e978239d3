"""Inequality metrics over deficit profiles: Gini and the Gini mean difference,
plus the potential-based GMD envelope."""
from __future__ import annotations

import math

import numpy as np

from .framework import PotentialParams


def gini(z) -> float:
    """Gini(z) = (1 / (2 m T)) * sum_{q,q'} |z_q - z_q'| with T = sum z;
    by convention 0 for the all-zero profile.  Computed via the sorted
    prefix-sum identity in O(m log m)."""
    z = np.asarray(z, dtype=float)
    m = len(z)
    total = float(np.sum(z))
    if total <= 0.0:
        return 0.0
    zs = np.sort(z)
    ranks = np.arange(1, m + 1)
    # sum over ordered pairs of |z_q - z_q'| = 2 * sum_k (2k - m - 1) z_(k)
    pairwise = 2.0 * float(np.sum((2 * ranks - m - 1) * zs))
    return pairwise / (2.0 * m * total)


def gmd(z) -> float:
    """Gini mean difference (1/m^2) sum_{q,q'} |z_q - z_q'| = 2 * mean * Gini."""
    z = np.asarray(z, dtype=float)
    if len(z) == 0:
        return 0.0
    return 2.0 * float(np.mean(z)) * gini(z)


def gmd_bound(psi: float, params: PotentialParams) -> float:
    """Envelope GMD(z) <= 2 * m^(-1/(2p)) * sqrt(Psi)."""
    return 2.0 * math.exp(-math.log(params.m) / (2.0 * params.p)) * math.sqrt(psi)
