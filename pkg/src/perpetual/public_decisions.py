"""Case 2: approximately-proportional online public decision-making.

A fixed candidate set C; each round every agent values every outcome, exactly
one outcome is chosen, and agent i's proportional benchmark advances by
M_i / n where M_i is i's favorite-outcome value this round.  Deficits are
normalized by the running maximum V_i (which is independent of the chosen
outcome).
"""
from __future__ import annotations

import numpy as np

from .framework import (
    CandidateSet,
    DimensionMismatch,
    MomentWitness,
    PotentialParams,
    safe_div,
)


class PdmState:
    """Per-agent aggregates u_i (realized utility), Prop_i, and running max V_i."""

    def __init__(self, n: int, num_outcomes: int):
        if n < 2 or num_outcomes < 1:
            raise ValueError("need n >= 2 agents and at least one outcome")
        self.n = n
        self.num_outcomes = num_outcomes
        self.util = np.zeros(n)
        self.prop = np.zeros(n)
        self.run_max = np.zeros(n)

    def _round_values(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape != (self.n, self.num_outcomes):
            raise DimensionMismatch(
                f"round has shape {v.shape}, expected ({self.n},{self.num_outcomes})"
            )
        if np.any(v < 0):
            raise ValueError("round values must be nonnegative")
        return v

    def deficits(self) -> np.ndarray:
        return self.prop - self.util

    def profile(self) -> np.ndarray:
        d = self.deficits()
        return np.array([safe_div(max(di, 0.0), vi) for di, vi in zip(d, self.run_max)])

    def apply(self, values, outcome: int) -> None:
        v = self._round_values(values)
        m_fav = v.max(axis=1)
        self.prop += m_fav / self.n
        self.util += v[:, outcome]
        np.maximum(self.run_max, m_fav, out=self.run_max)


def pdm_candidates(s: PdmState, values) -> CandidateSet:
    """One dense profile per outcome; the scale V' = max{V, M} is computed
    once, independent of the outcome (asserted structurally by construction)."""
    v = s._round_values(values)
    m_fav = v.max(axis=1)
    v_new = np.maximum(s.run_max, m_fav)
    d_base = s.deficits() + m_fav / s.n
    profiles = []
    for o in range(s.num_outcomes):
        d = d_base - v[:, o]
        z = np.array([safe_div(max(di, 0.0), vi) for di, vi in zip(d, v_new)])
        profiles.append((o, z))
    return CandidateSet.from_profiles(profiles)


def pdm_witness(s: PdmState, values) -> MomentWitness:
    """Reference action k = agent k's favorite outcome (lowest index on ties);
    s_i = M_i / V'_i; Delta_i(i) = -(1-1/n) s_i, Delta_i(k) = s_i / n."""
    v = s._round_values(values)
    m_fav = v.max(axis=1)
    v_new = np.maximum(s.run_max, m_fav)
    ref = tuple(int(np.argmax(v[k])) for k in range(s.n))
    delta = np.zeros((s.n, s.n))
    for i in range(s.n):
        si = safe_div(m_fav[i], v_new[i])
        delta[i, :] = si / s.n
        delta[i, i] = -(1.0 - 1.0 / s.n) * si
    return MomentWitness(ref_actions=ref, delta=delta)


def pdm_params(n: int, p: float = 0.0) -> PotentialParams:
    return PotentialParams(m=n, n_ref=n, sigma_sq=1.0, p=p)
