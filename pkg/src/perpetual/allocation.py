"""Online item allocation instantiations: PROP-times-c, EF-times-c, and
classical EFc via threshold counts.

Each state stores running aggregates only (bundle values, totals, missed-item
maxima, pair scales, threshold counts) -- never item lists -- except the EFc
checker, which optionally keeps per-pair sorted top-value lists.  Deficits are
recomputed from aggregates each round; aggregates update incrementally.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .framework import (
    CandidateSet,
    DimensionMismatch,
    MomentWitness,
    PotentialParams,
    safe_div,
)


class ValueNotInLedger(ValueError):
    pass


def _as_values(values, n: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatch(f"item has shape {v.shape}, expected ({n},)")
    if np.any(v < 0):
        raise ValueError("item values must be nonnegative")
    return v


# ---------------------------------------------------------------------------
# Case 1: proportionality scaled by the largest missed item (PROP x c)
# ---------------------------------------------------------------------------

class PropxState:
    """Per-agent aggregates: v_i(P_i), v_i(G), and missed-item max U_i."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("need at least 2 agents")
        self.n = n
        self.bundle_value = np.zeros(n)
        self.total_value = np.zeros(n)
        self.missed_max = np.zeros(n)

    def deficits(self) -> np.ndarray:
        """d_i = v_i(G)/n - v_i(P_i), sign kept."""
        return self.total_value / self.n - self.bundle_value

    def profile(self) -> np.ndarray:
        d = self.deficits()
        return np.array([safe_div(max(di, 0.0), u) for di, u in zip(d, self.missed_max)])

    def apply(self, values, recipient: int) -> None:
        x = _as_values(values, self.n)
        self.total_value += x
        self.bundle_value[recipient] += x[recipient]
        for i in range(self.n):
            if i != recipient and x[i] > self.missed_max[i]:
                self.missed_max[i] = x[i]


def propx_candidates(s: PropxState, values) -> CandidateSet:
    """Hypothetical profiles per recipient, in base+patch (single-swap) form:
    the base is the everyone-missed profile; candidate a swaps entry a."""
    n = s.n
    x = _as_values(values, n)
    d = s.deficits()
    z_miss = np.empty(n)
    patches = {}
    for i in range(n):
        u_miss = max(s.missed_max[i], x[i])
        z_miss[i] = safe_div(max(d[i] + x[i] / n, 0.0), u_miss)
        z_recv = safe_div(max(d[i] - (1.0 - 1.0 / n) * x[i], 0.0), s.missed_max[i])
        patches[i] = [(i, z_recv)]
    return CandidateSet.from_patches(z_miss, patches)


def propx_witness(s: PropxState, values) -> MomentWitness:
    """Reference actions are the n recipients; s_i = x_i / max{U_i, x_i};
    Delta_i(i) = -(1-1/n) s_i, Delta_i(a) = s_i / n otherwise.  Rows sum to 0
    exactly and row squared sums are (n-1) s_i^2 / n <= 1."""
    n = s.n
    x = _as_values(values, n)
    delta = np.zeros((n, n))
    for i in range(n):
        si = safe_div(x[i], max(s.missed_max[i], x[i]))
        delta[i, :] = si / n
        delta[i, i] = -(1.0 - 1.0 / n) * si
    return MomentWitness(ref_actions=tuple(range(n)), delta=delta)


def propx_params(n: int, p: float = 0.0) -> PotentialParams:
    return PotentialParams(m=n, n_ref=n, sigma_sq=1.0, p=p)


def run_propx_potential(stream, n: int, params: PotentialParams | None = None):
    """Tight loop for long proportionality runs of the potential rule.

    Chooses argmin_a Phi(a) via the single-term swap
    Phi(a) = Phi_miss - f(z_miss[a]) + f(z_recv[a]) (so argmin of the f
    difference), which is the same rule as choose_action(propx_candidates(...))
    without per-round object construction.  Tracks the prefix-wise guarantee
    [d_i]_+ <= ct_threshold(t) * U_i and the one-step Psi growth along the way.

    Returns a dict with the final state and the worst slack observed for both
    checks (negative slack everywhere = all checks passed).
    """
    from .framework import ct_threshold, one_step_growth_bound

    params = params or propx_params(n)
    p, m = params.p, params.m
    four_p2 = 4.0 * p * p
    ct_scale = math.exp(math.log(m) / p)
    ct_rate = 2.0 * math.sqrt(math.e) * p * params.sigma_sq / params.n_ref
    growth = one_step_growth_bound(params)
    inv_p = 1.0 / p

    state = PropxState(n)
    total = [0.0] * n
    bundle = [0.0] * n
    missed = [0.0] * n
    psi_prev = (m * four_p2 ** p) ** inv_p
    worst_prefix = -math.inf
    worst_growth = -math.inf
    t = 0
    rng_range = range(n)

    for values in stream:
        t += 1
        x = [float(v) for v in values]
        z_miss = [0.0] * n
        f_miss = [0.0] * n
        f_recv = [0.0] * n
        z_recv = [0.0] * n
        phi_miss = 0.0
        best = 0
        best_diff = math.inf
        for i in rng_range:
            d = total[i] / n - bundle[i]
            xi = x[i]
            u_miss = missed[i] if missed[i] > xi else xi
            dm = d + xi / n
            zm = dm / u_miss if (dm > 0.0 and u_miss > 0.0) else 0.0
            dr = d - (1.0 - 1.0 / n) * xi
            zr = dr / missed[i] if (dr > 0.0 and missed[i] > 0.0) else 0.0
            fm = (zm * zm + four_p2) ** p
            fr = (zr * zr + four_p2) ** p
            z_miss[i] = zm
            z_recv[i] = zr
            f_miss[i] = fm
            f_recv[i] = fr
            phi_miss += fm
            diff = fr - fm
            if diff < best_diff:
                best_diff = diff
                best = i
        a = best
        # realized update
        for i in rng_range:
            total[i] += x[i]
            if i != a and x[i] > missed[i]:
                missed[i] = x[i]
        bundle[a] += x[a]
        # growth check
        psi = (phi_miss + best_diff) ** inv_p
        g = psi - psi_prev - growth
        if g > worst_growth:
            worst_growth = g
        psi_prev = psi
        # prefix-wise PROP x c check
        ct = ct_scale * math.sqrt(four_p2 + ct_rate * t)
        for i in rng_range:
            d = total[i] / n - bundle[i]
            if d > 0.0:
                s = d - ct * missed[i]
                if s > worst_prefix:
                    worst_prefix = s

    state.total_value = np.asarray(total)
    state.bundle_value = np.asarray(bundle)
    state.missed_max = np.asarray(missed)
    return {
        "rounds": t,
        "state": state,
        "worst_prefix_slack": worst_prefix,
        "worst_growth_slack": worst_growth,
        "final_psi": psi_prev,
    }


def bprop_check(s: PropxState, c: float, tol: float = 1e-9) -> bool:
    """Bounded proportionality: max_i d_i <= c (for [0,1]-bounded values)."""
    return bool(np.max(s.deficits()) <= c + tol)


# ---------------------------------------------------------------------------
# Case 3: pairwise envy scaled by the largest item in the envied bundle
# ---------------------------------------------------------------------------

class EfxState:
    """Cross-values v_i(P_j) and pair scales s_(i,j) = max value i assigns to
    an item in j's bundle.  Quality variables are ordered pairs i != j."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("need at least 2 agents")
        self.n = n
        self.cross_value = np.zeros((n, n))
        self.pair_scale = np.zeros((n, n))  # diagonal unused

    @property
    def m(self) -> int:
        return self.n * (self.n - 1)

    def pair_index(self, i: int, j: int) -> int:
        return i * (self.n - 1) + (j if j < i else j - 1)

    def pairs(self):
        for i in range(self.n):
            for j in range(self.n):
                if i != j:
                    yield i, j

    def envy(self, i: int, j: int) -> float:
        return self.cross_value[i, j] - self.cross_value[i, i]

    def profile(self) -> np.ndarray:
        z = np.zeros(self.m)
        for i, j in self.pairs():
            z[self.pair_index(i, j)] = safe_div(
                max(self.envy(i, j), 0.0), self.pair_scale[i, j]
            )
        return z

    def apply(self, values, recipient: int) -> None:
        x = _as_values(values, self.n)
        self.cross_value[:, recipient] += x
        for i in range(self.n):
            if i != recipient and x[i] > self.pair_scale[i, recipient]:
                self.pair_scale[i, recipient] = x[i]


def efx_candidates(s: EfxState, values) -> CandidateSet:
    """Base = current profile; candidate r patches only the 2(n-1) pairs that
    contain r (envy toward r grows, r's own envy shrinks)."""
    n = s.n
    x = _as_values(values, n)
    base = s.profile()
    patches = {}
    for r in range(n):
        ps = []
        for i in range(n):
            if i == r:
                continue
            # pair (i, r): i's envy toward r after r receives the item
            envy_ir = s.envy(i, r) + x[i]
            scale_ir = max(s.pair_scale[i, r], x[i])
            ps.append((s.pair_index(i, r), safe_div(max(envy_ir, 0.0), scale_ir)))
            # pair (r, i): r's envy toward i shrinks by r's own value
            envy_ri = s.envy(r, i) - x[r]
            ps.append((s.pair_index(r, i), safe_div(max(envy_ri, 0.0), s.pair_scale[r, i])))
        patches[r] = ps
    return CandidateSet.from_patches(base, patches)


def efx_witness(s: EfxState, values) -> MomentWitness:
    """Pair (i,j) row: alpha = x_i / max{s_(i,j), x_i}; +alpha at reference
    action j, -alpha at i, zeros elsewhere.  sigma^2 = 2."""
    n = s.n
    x = _as_values(values, n)
    delta = np.zeros((s.m, n))
    for i, j in s.pairs():
        alpha = safe_div(x[i], max(s.pair_scale[i, j], x[i]))
        q = s.pair_index(i, j)
        delta[q, j] = alpha
        delta[q, i] = -alpha
    return MomentWitness(ref_actions=tuple(range(n)), delta=delta)


def efx_params(n: int, p: float = 0.0) -> PotentialParams:
    return PotentialParams(m=n * (n - 1), n_ref=n, sigma_sq=2.0, p=p)


# ---------------------------------------------------------------------------
# Case 4: classical EFc via threshold counts over a fixed value ledger
# ---------------------------------------------------------------------------

class EfcThresholdState:
    """Counts C[i, j, l] = #{g in P_j : v_i(g) >= theta[l]} over a fixed
    sorted ledger theta of distinct positive values (known in advance).

    ``top_k_cap`` bounds the per-pair sorted value lists retained for
    ``check_efk``; ``None`` keeps them unbounded (exact checking).
    """

    def __init__(self, n: int, theta, top_k_cap: int | None = 64):
        if n < 2:
            raise ValueError("need at least 2 agents")
        th = sorted(float(v) for v in theta)
        if len(th) != len(set(th)) or any(v <= 0 for v in th):
            raise ValueError("theta must be distinct positive values")
        self.n = n
        self.theta = th
        self.L = len(th)
        self.counts = np.zeros((n, n, self.L), dtype=np.int64)
        self.cross_value = np.zeros((n, n))
        self.bundle_sizes = np.zeros(n, dtype=np.int64)
        self.top_k_cap = top_k_cap
        # top_values[i][j]: v_i values of items in P_j, sorted descending
        self.top_values = [[[] for _ in range(n)] for _ in range(n)]

    @property
    def m(self) -> int:
        return self.n * (self.n - 1) * self.L

    def quality_index(self, i: int, j: int, l: int) -> int:
        pair = i * (self.n - 1) + (j if j < i else j - 1)
        return pair * self.L + l

    def _indicator_counts(self, values) -> np.ndarray:
        """s[i, l] = 1 if v_i(g) >= theta[l]."""
        x = _as_values(values, self.n)
        s = np.zeros((self.n, self.L), dtype=np.int64)
        for i in range(self.n):
            if x[i] > 0 and x[i] not in self.theta:
                raise ValueNotInLedger(f"value {x[i]} not in the declared ledger")
            k = bisect.bisect_right(self.theta, x[i])
            s[i, :k] = 1
        return s

    def profile(self) -> np.ndarray:
        z = np.zeros(self.m)
        for i in range(self.n):
            for j in range(self.n):
                if i == j:
                    continue
                gap = self.counts[i, j] - self.counts[i, i]
                for l in range(self.L):
                    z[self.quality_index(i, j, l)] = max(float(gap[l]), 0.0)
        return z

    def apply(self, values, recipient: int) -> None:
        x = _as_values(values, self.n)
        s = self._indicator_counts(x)
        self.counts[:, recipient, :] += s
        self.cross_value[:, recipient] += x
        self.bundle_sizes[recipient] += 1
        for i in range(self.n):
            lst = self.top_values[i][recipient]
            bisect.insort(lst, -x[i])  # store negated for descending order
            if self.top_k_cap is not None and len(lst) > self.top_k_cap:
                lst.pop()


def efc_candidates(s: EfcThresholdState, values) -> CandidateSet:
    """Base = current profile; candidate a touches only the O(nL) entries of
    pairs containing a."""
    n, L = s.n, s.L
    ind = s._indicator_counts(values)
    base = s.profile()
    patches = {}
    for a in range(n):
        ps = []
        for i in range(n):
            if i == a:
                continue
            gap_ia = s.counts[i, a] - s.counts[i, i] + ind[i]
            gap_ai = s.counts[a, i] - s.counts[a, a] - ind[a]
            for l in range(L):
                ps.append((s.quality_index(i, a, l), max(float(gap_ia[l]), 0.0)))
                ps.append((s.quality_index(a, i, l), max(float(gap_ai[l]), 0.0)))
        patches[a] = ps
    return CandidateSet.from_patches(base, patches)


def efc_witness(s: EfcThresholdState, values) -> MomentWitness:
    """Row (i,j,l): -1[v_i >= theta_l] at reference action i, +1[v_i >= theta_l]
    at j, zeros elsewhere.  sigma^2 = 2."""
    n = s.n
    ind = s._indicator_counts(values)
    delta = np.zeros((s.m, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for l in range(s.L):
                q = s.quality_index(i, j, l)
                delta[q, j] = float(ind[i, l])
                delta[q, i] = -float(ind[i, l])
    return MomentWitness(ref_actions=tuple(range(n)), delta=delta)


def efc_params(n: int, L: int, p: float = 0.0) -> PotentialParams:
    return PotentialParams(m=n * (n - 1) * L, n_ref=n, sigma_sq=2.0, p=p)


def check_efk(s: EfcThresholdState, k: int, tol: float = 1e-9) -> dict[tuple[int, int], bool]:
    """Envy-free up to k items, brute force per ordered pair: remove the k
    highest v_i-valued goods from P_j and compare.

    When the stored top list was truncated by ``top_k_cap`` the stored sum is
    a lower bound on the true top-k sum, so a pass is always sound.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    out = {}
    for i in range(s.n):
        for j in range(s.n):
            if i == j:
                continue
            envy = s.cross_value[i, j] - s.cross_value[i, i]
            stored = s.top_values[i][j]
            kk = min(k, int(s.bundle_sizes[j]), len(stored))
            top_sum = -sum(stored[:kk])
            out[(i, j)] = max(envy, 0.0) <= top_sum + tol
    return out
