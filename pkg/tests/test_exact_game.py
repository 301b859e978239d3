"""Exact frontier solver: LP closed form, frontier construction, AUX/EXP."""
from __future__ import annotations

from fractions import Fraction

import pytest

from perpetual.exact_game import (
    INF,
    FrontierBuilder,
    FrontierSizeExceeded,
    KMaxExceeded,
    aux,
    d0,
    dominates,
    exp_policy,
    is_inf,
    lp_solve,
    next_frontier,
    pareto_prune,
    surplus_update,
)

F = Fraction


# ---------------------------------------------------------------------------
# Extended rationals
# ---------------------------------------------------------------------------

def test_inf_ordering_and_arithmetic():
    assert INF > F(10**9)
    assert not (INF > INF)
    assert INF >= INF and INF == INF and not (INF < F(0))
    assert is_inf(INF + F(3)) and is_inf(F(3) + INF)
    assert is_inf(INF - F(5))
    with pytest.raises(ArithmeticError):
        INF - INF
    with pytest.raises(ArithmeticError):
        F(1) - INF


# ---------------------------------------------------------------------------
# LP closed form
# ---------------------------------------------------------------------------

def test_lp_solve_examples():
    assert lp_solve((INF, F(0)), 0) == (F(1), F(1))
    assert lp_solve((F(1), F(1)), 0) == (F(1), F(0))
    assert lp_solve((F(3), F(0)), 0) == (F(1), F(1))
    y, z = lp_solve((INF, INF), 0)
    assert is_inf(y) and z == 0
    # three agents: x = (4, 1, 2), i = 0 -> z* = 1, Y = min(4 - 2, 1 + 1) = 2
    assert lp_solve((F(4), F(1), F(2)), 0) == (F(2), F(1))


@pytest.mark.parametrize("n", [2, 3])
def test_lp_solve_matches_grid_oracle(n):
    """For fixed z, the best y is min(x_i - (n-1)z, min_j x_j + z); a fine z
    grid must come within Lipschitz distance of the closed-form optimum."""
    q = 1000
    import random

    rng = random.Random(0)
    for _ in range(40):
        x = tuple(F(rng.randint(0, 40), 8) for _ in range(n))
        for i in range(n):
            y, zstar = lp_solve(x, i)
            mu = min(x[j] for j in range(n) if j != i)
            best = max(
                min(x[i] - (n - 1) * F(k, q), mu + F(k, q)) for k in range(q + 1)
            )
            assert best <= y  # closed form is feasible-optimal
            assert y - best <= F(n, q)
            assert F(0) <= zstar <= F(1)


# ---------------------------------------------------------------------------
# Frontiers
# ---------------------------------------------------------------------------

def test_d0():
    assert d0(2) == frozenset({(F(0), INF), (INF, F(0))})
    assert len(d0(4)) == 4


def test_d1_n2():
    assert next_frontier(d0(2), 2) == frozenset(
        {(F(0), INF), (F(1), F(1)), (INF, F(0))}
    )


def test_frontier_sizes_n2():
    builder = FrontierBuilder(2)
    assert [len(builder.get(k)) for k in range(8)] == [2, 3, 5, 9, 17, 35, 71, 151]


def test_pruned_frontier_pairwise_incomparable():
    builder = FrontierBuilder(2)
    for k in (2, 4, 6):
        pts = sorted(builder.get(k), reverse=True)
        for a in pts:
            for b in pts:
                if a != b:
                    assert not all(x >= y for x, y in zip(a, b)) or not all(
                        y >= x for x, y in zip(a, b)
                    )


def test_prune_preserves_dominated_region():
    pruned = FrontierBuilder(2, prune=True)
    raw = FrontierBuilder(2, prune=False)
    grid = [F(k, 4) for k in range(17)]  # [0, 4] in quarter steps
    for k in range(5):
        p, r = pruned.get(k), raw.get(k)
        assert p <= r or k == 0
        for x0 in grid:
            for x1 in grid:
                x = (x0, x1)
                assert any(dominates(q, x) for q in p) == any(
                    dominates(q, x) for q in r
                )


def test_frontier_cap():
    with pytest.raises(FrontierSizeExceeded):
        FrontierBuilder(2, cap=4).get(3)


def test_pareto_prune_basic():
    pts = [(F(1), F(1)), (F(0), F(1)), (F(2), F(0)), (F(1), F(0))]
    assert pareto_prune(pts, 2) == frozenset({(F(1), F(1)), (F(2), F(0))})


# ---------------------------------------------------------------------------
# AUX
# ---------------------------------------------------------------------------

def test_dominates():
    assert dominates((INF, F(1)), (F(5), F(0)))
    assert not dominates((F(1), F(1)), (F(1), F(0)))  # strict in every coord


def test_aux_small_values():
    b = FrontierBuilder(2)
    assert aux((F(-1), F(5)), 2, builder=b) == 0  # already violated
    assert aux((F(0), F(0)), 2, builder=b) == 1
    assert aux((F(1), F(0)), 2, builder=b) == 2  # (2, 1/2) in D^2 covers it
    assert aux((F(1), F(1)), 2, builder=b) == 3
    with pytest.raises(KMaxExceeded):
        aux((F(2), F(2)), 2, k_max=5, builder=b)
    with pytest.raises(ValueError):
        aux((F(0), F(0)), 2, k_max=-1)


def test_aux_monotone_in_state():
    """A coordinate-wise smaller state can never survive longer."""
    import random

    rng = random.Random(7)
    b = FrontierBuilder(2)
    for _ in range(100):
        x = (F(rng.randint(0, 12), 8), F(rng.randint(0, 12), 8))
        y = (x[0] + F(rng.randint(0, 8), 8), x[1] + F(rng.randint(0, 8), 8))
        try:
            ax = aux(x, 2, k_max=7, builder=b)
        except KMaxExceeded:
            continue
        try:
            ay = aux(y, 2, k_max=7, builder=b)
        except KMaxExceeded:
            ay = 8
        assert ax <= ay


def _certificate_items(builder, depth):
    """Adversary items harvested from the frontier construction: for every
    ordered pair of D^k points the optimal z* per coordinate."""
    quarter = [F(k, 4) for k in range(5)]
    certs = {(a, b) for a in quarter for b in quarter}
    for k in range(depth):
        pts = sorted(builder.get(k), reverse=True)
        for a in pts:
            for b in pts:
                z0 = lp_solve((a[0], b[0]), 0)[1]
                z1 = lp_solve((b[1], a[1]), 1)[1]
                certs.add((z0, z1))
    return sorted(certs)


def test_aux_matches_minimax_game_tree():
    """aux(x) = k means the adversary can force a negative coordinate within
    k rounds but not within k - 1, playing items from the certificate set."""
    builder = FrontierBuilder(2)
    certs = _certificate_items(builder, 3)
    memo = {}

    def forced(x, k):
        if min(x) < 0:
            return True
        if k == 0:
            return False
        key = (x, k)
        got = memo.get(key)
        if got is None:
            got = any(
                all(forced(surplus_update(x, v, i), k - 1) for i in (0, 1))
                for v in certs
            )
            memo[key] = got
        return got

    grid = [F(0), F(1, 2), F(1), F(3, 2), F(2)]
    checked = 0
    for x0 in grid:
        for x1 in grid:
            x = (x0, x1)
            try:
                k = aux(x, 2, k_max=3, builder=builder)
            except KMaxExceeded:
                continue
            assert forced(x, k), x
            if k > 0:
                assert not forced(x, k - 1), x
            checked += 1
    assert checked >= 10


# ---------------------------------------------------------------------------
# Surplus update and EXP
# ---------------------------------------------------------------------------

def test_surplus_update():
    assert surplus_update((F(0), F(3)), (F(1), F(1)), 0) == (F(1), F(2))
    assert surplus_update((F(0), F(3)), (F(1), F(1)), 1) == (F(-1), F(4))
    assert surplus_update((F(1), F(2), F(3)), (F(1, 2),) * 3, 2) == (
        F(1, 2), F(3, 2), F(4),
    )


def test_exp_policy_example():
    b = FrontierBuilder(2)
    assert exp_policy((F(0), F(3)), (F(1), F(1)), 2, builder=b) == 0
    # zero item: both children identical -> lowest index
    assert exp_policy((F(1), F(1)), (F(0), F(0)), 2, builder=b) == 0


def test_exp_policy_k_max_saturation():
    # both children survive beyond k_max -> treated equally, lowest index wins
    b = FrontierBuilder(2)
    assert exp_policy((F(9), F(9)), (F(1, 2), F(1, 2)), 2, k_max=2, builder=b) == 0


def test_exp_policy_rejects_bad_values():
    with pytest.raises(ValueError):
        exp_policy((F(1), F(1)), (F(2), F(0)), 2)
    with pytest.raises(ValueError):
        exp_policy((F(1), F(1)), (INF, F(0)), 2)
