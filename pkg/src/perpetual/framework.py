"""Generic deficit framework and the p-potential greedy rule.

State is summarized by a nonnegative deficit profile z of length m.  Each round
a candidate set of hypothetical post-step profiles arrives and the rule picks
the action minimizing the potential

    Psi = (sum_q (z_q^2 + 4 p^2)^p)^(1/p).

All potential arithmetic happens in the log domain (log-sum-exp): with
p = ln m and deficits growing like sqrt(t), the raw summands overflow doubles
on long runs.  Closed-form bounds from the analysis (one-step growth, any-time
potential, disappointed-count, c_t threshold) are exposed as runtime checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT_E = math.sqrt(math.e)

#: absolute tolerance for inequality checks
ABS_TOL = 1e-9
#: relative tolerance for identities
REL_TOL = 1e-12


class EmptyCandidateSet(ValueError):
    pass


class NonpositiveC(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def default_p(m: int) -> float:
    """Default potential exponent: 1 for m <= 2, ln m otherwise."""
    return 1.0 if m <= 2 else math.log(m)


@dataclass(frozen=True)
class PotentialParams:
    """Fixed parameters of one instantiation: m = |Q|, reference-action count
    n_ref, second-moment budget sigma_sq, and the exponent p (real, >= 1)."""

    m: int
    n_ref: int
    sigma_sq: float = 1.0
    p: float = field(default=0.0)

    def __post_init__(self):
        if self.m < 1 or self.n_ref < 1 or self.sigma_sq <= 0:
            raise ValueError("m, n_ref must be positive and sigma_sq > 0")
        if self.p == 0.0:
            object.__setattr__(self, "p", default_p(self.m))
        if self.p < 1.0:
            raise ValueError("p must be >= 1")


def log_potential_component(u: float, p: float) -> float:
    """ln f(u) with f(u) = (u^2 + 4 p^2)^p."""
    return p * math.log(u * u + 4.0 * p * p)


def _log_phi(z: np.ndarray, p: float) -> float:
    """ln Phi = ln sum_q f(z_q), evaluated via log-sum-exp."""
    logf = p * np.log(z * z + 4.0 * p * p)
    mx = float(np.max(logf))
    return mx + math.log(float(np.sum(np.exp(logf - mx))))


def profile_psi(z, params: PotentialParams) -> float:
    """Psi = Phi^(1/p), computed as exp(logsumexp / p)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (params.m,):
        raise DimensionMismatch(f"profile length {z.shape} != m={params.m}")
    return math.exp(_log_phi(z, params.p) / params.p)


class CandidateSet:
    """Hypothetical post-step deficit profiles, one per feasible action.

    Two interchangeable internal forms:

    * dense -- an explicit profile per action;
    * patched -- a shared base profile plus, per action, the handful of
      entries that action changes.  This is what keeps per-round candidate
      construction O(touched entries) for the allocation instantiations.

    ``profile(a)`` and ``log_phi_by_action`` behave identically for both.
    """

    def __init__(self, *, base=None, patches=None, profiles=None):
        if profiles is not None:
            self._dense = [(int(a), np.asarray(z, dtype=float)) for a, z in profiles]
            if not self._dense:
                raise EmptyCandidateSet("no candidate profiles")
            m = len(self._dense[0][1])
            if any(len(z) != m for _, z in self._dense):
                raise DimensionMismatch("candidate profiles differ in length")
            self._base = None
            self._patches = None
        else:
            if base is None or patches is None or not patches:
                raise EmptyCandidateSet("no candidate profiles")
            self._dense = None
            self._base = np.asarray(base, dtype=float)
            self._patches = {int(a): list(ps) for a, ps in patches.items()}

    @classmethod
    def from_profiles(cls, profiles) -> "CandidateSet":
        return cls(profiles=profiles)

    @classmethod
    def from_patches(cls, base, patches) -> "CandidateSet":
        """``patches``: {action_id: [(quality_index, new_z_value), ...]}."""
        return cls(base=base, patches=patches)

    @property
    def m(self) -> int:
        if self._dense is not None:
            return len(self._dense[0][1])
        return len(self._base)

    def action_ids(self) -> list[int]:
        if self._dense is not None:
            return [a for a, _ in self._dense]
        return sorted(self._patches)

    def profile(self, action_id: int) -> np.ndarray:
        if self._dense is not None:
            for a, z in self._dense:
                if a == action_id:
                    return z
            raise KeyError(action_id)
        z = self._base.copy()
        for q, v in self._patches[action_id]:
            z[q] = v
        return z

    def log_phi_by_action(self, params: PotentialParams) -> dict[int, float]:
        """ln Phi per action.  For the patched form only the touched entries
        are re-evaluated (single-term swaps around the shared base sum)."""
        p = params.p
        if self._dense is not None:
            return {a: _log_phi(z, p) for a, z in self._dense}
        base = self._base
        logf = p * np.log(base * base + 4.0 * p * p)
        mx = float(np.max(logf))
        scaled = np.exp(logf - mx)
        total = float(np.sum(scaled))
        out = {}
        for a, ps in self._patches.items():
            s = total
            for q, v in ps:
                s += math.exp(log_potential_component(v, p) - mx) - scaled[q]
            out[a] = mx + math.log(s)
        return out


def choose_action(candidates: CandidateSet, params: PotentialParams) -> int:
    """argmin_a Psi(a); ties broken by lowest action id (deterministic)."""
    logphi = candidates.log_phi_by_action(params)
    if not logphi:
        raise EmptyCandidateSet("no candidate profiles")
    return min(logphi, key=lambda a: (logphi[a], a))


def disappointed_count(z, c: float) -> int:
    """|{q : z_q > c}| (strict)."""
    if c < 0:
        raise NonpositiveC("c must be >= 0")
    z = np.asarray(z, dtype=float)
    return int(np.sum(z > c))


def bound_disappointed(t: int, c: float, params: PotentialParams) -> float:
    """Closed-form cap on the number of c-disappointed variables at time t:
    m * ((4 p^2 + 2 sqrt(e) p sigma^2 t / n) / c^2)^p, evaluated in logs."""
    if c <= 0:
        raise NonpositiveC("c must be > 0")
    p, m = params.p, params.m
    inner = 4.0 * p * p + 2.0 * SQRT_E * p * params.sigma_sq * t / params.n_ref
    return math.exp(math.log(m) + p * (math.log(inner) - 2.0 * math.log(c)))


def ct_threshold(t: int, params: PotentialParams) -> float:
    """c_t = m^(1/p) * sqrt(4 p^2 + 2 sqrt(e) p sigma^2 t / n); guarantees
    bound_disappointed(t, c_t) < 1, i.e. no variable is c_t-disappointed."""
    p, m = params.p, params.m
    inner = 4.0 * p * p + 2.0 * SQRT_E * p * params.sigma_sq * t / params.n_ref
    return math.exp(math.log(m) / p) * math.sqrt(inner)


def one_step_growth_bound(params: PotentialParams) -> float:
    """Per-round additive growth allowance for Psi."""
    p = params.p
    return 2.0 * SQRT_E * p * params.sigma_sq * math.exp(math.log(params.m) / p) / params.n_ref


def one_step_growth_check(psi_prev: float, psi_next: float, params: PotentialParams) -> bool:
    return psi_next <= psi_prev + one_step_growth_bound(params) + ABS_TOL


def anytime_psi_bound(t: int, params: PotentialParams) -> float:
    """Any-time potential bound m^(1/p) (4 p^2 + 2 sqrt(e) p sigma^2 t / n)."""
    p = params.p
    inner = 4.0 * p * p + 2.0 * SQRT_E * p * params.sigma_sq * t / params.n_ref
    return math.exp(math.log(params.m) / p) * inner


@dataclass(frozen=True)
class MomentWitness:
    """Certificate for one round: n_ref reference action ids (repeats allowed)
    and the m x n_ref increment matrix Delta."""

    ref_actions: tuple[int, ...]
    delta: np.ndarray  # shape (m, n_ref)


@dataclass
class WitnessReport:
    shift_ok: bool
    first_moment_ok: bool
    second_moment_ok: bool
    range_ok: bool
    worst_shift_violation: float
    worst_first_moment: float
    worst_second_moment: float

    @property
    def ok(self) -> bool:
        return self.shift_ok and self.first_moment_ok and self.second_moment_ok and self.range_ok


def verify_moment_witness(
    z_prev,
    candidates: CandidateSet,
    w: MomentWitness,
    params: PotentialParams,
    tol: float = ABS_TOL,
    gamma: float = 1.0,
) -> WitnessReport:
    """Check the shift / first-moment / second-moment conditions.

    Shift: for each reference action a_k, the candidate profile satisfies
    z_next <= [gamma * z_prev + Delta[:, k]]_+ + tol entrywise (gamma = 1 for
    the undiscounted framework, < 1 for the discounted shift form).
    First moment: row sums of Delta <= 0.  Second: row sums of squares
    <= sigma^2.  Entries must lie in [-1, 1].
    """
    z_prev = np.asarray(z_prev, dtype=float)
    delta = np.asarray(w.delta, dtype=float)
    if z_prev.shape != (params.m,) or delta.shape != (params.m, params.n_ref):
        raise DimensionMismatch(
            f"expected z ({params.m},) and delta ({params.m},{params.n_ref}); "
            f"got {z_prev.shape} and {delta.shape}"
        )
    if len(w.ref_actions) != params.n_ref:
        raise DimensionMismatch("ref_actions length != n_ref")

    range_ok = bool(np.all(np.abs(delta) <= 1.0 + tol))
    row_sums = delta.sum(axis=1)
    row_sq = (delta * delta).sum(axis=1)
    worst_first = float(np.max(row_sums)) if len(row_sums) else 0.0
    worst_second = float(np.max(row_sq)) if len(row_sq) else 0.0

    worst_shift = 0.0
    for k, a in enumerate(w.ref_actions):
        z_next = candidates.profile(a)
        allowed = np.maximum(gamma * z_prev + delta[:, k], 0.0)
        worst_shift = max(worst_shift, float(np.max(z_next - allowed)))

    return WitnessReport(
        shift_ok=worst_shift <= tol,
        first_moment_ok=worst_first <= tol,
        second_moment_ok=worst_second <= params.sigma_sq + tol,
        range_ok=range_ok,
        worst_shift_violation=worst_shift,
        worst_first_moment=worst_first,
        worst_second_moment=worst_second,
    )


def safe_div(x: float, y: float) -> float:
    """Total scale division: x / y when y > 0, else 0 (the 0/0 convention
    used by every scale-normalized deficit)."""
    return x / y if y > 0 else 0.0
