import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import brute_welfare, harmonic, links_of
from platform_market.fixtures import generate_fixture, generate_random
from platform_market.matching import (
    SellerNotInQuery,
    WelfareQuery,
    full_query,
    max_weight_matching,
    oracle_for,
    optimal_welfare,
    solve_assignment,
    welfare,
    welfare_with_duplicate,
)
from platform_market.model import make_market

seeds = st.integers(0, 100_000)
sizes = st.integers(1, 6)


def test_fig1_without_platform():
    m = generate_fixture("fig1").market
    res = max_weight_matching(m, full_query(m))
    assert res.welfare == 3
    assert res.allocation.pairs == ((0, 0), (1, 1), (2, 2))
    assert res.transacting_sellers == {0, 1, 2}


def test_empty_seller_set():
    m = generate_fixture("fig1").market
    res = max_weight_matching(m, WelfareQuery(frozenset(), frozenset(range(4))))
    assert res.welfare == 0 and res.allocation.pairs == ()


def test_fig2_fully_connected():
    n, eps = 5, Fraction(1, 1000)
    m = generate_fixture("fig2", n=n, eps=eps).market
    assert optimal_welfare(m) == n * harmonic(n) + eps
    assert welfare(m, full_query(m, joined=range(n))) == n * harmonic(n) + eps


def test_duplicate_examples():
    one = make_market([[5]], [(0, 0)])
    assert welfare_with_duplicate(one, full_query(one), 0) == 5
    two = make_market([[5], [4]], [(0, 0), (1, 0)])
    assert welfare_with_duplicate(two, full_query(two), 0) == 9
    fig2 = generate_fixture("fig2", n=3).market
    assert welfare_with_duplicate(fig2, full_query(fig2), 0) == 0
    with pytest.raises(SellerNotInQuery):
        welfare_with_duplicate(two, WelfareQuery(frozenset(), frozenset({0})), 0)


def test_fig2_duplicate_on_complete_graph_unchanged():
    n = 3
    m = generate_fixture("fig2", n=n).market
    q = full_query(m, joined=range(n))
    assert welfare_with_duplicate(m, q, 0) == welfare(m, q)


def test_assignment_rectangular():
    total, rows = solve_assignment([[1, 7], [5, 2], [4, 4]])
    assert total == 12
    assert sorted(c for c in rows if c >= 0) == [0, 1]
    assert solve_assignment([]) == (0, [])


@given(seeds, sizes, sizes, st.sampled_from([0.0, 0.3, 0.6, 1.0]))
def test_welfare_matches_exhaustive_search(seed, n, m, density):
    mk = generate_random(seed, n, m, edge_density=density, denominator=2)
    res = max_weight_matching(mk, full_query(mk))
    assert res.welfare == brute_welfare(mk.values, mk.edges, range(m))
    assert sum(mk.values[i][j] for i, j in res.allocation.pairs) == res.welfare
    assert all((i, j) in mk.edges for i, j in res.allocation.pairs)
    assert res.allocation.is_valid()


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_duplicate_matches_exhaustive_search(seed, n, m):
    mk = generate_random(seed, n, m, edge_density=0.6)
    for j in range(m):
        want = brute_welfare(mk.values, mk.edges, range(m), copies=[j])
        assert welfare_with_duplicate(mk, full_query(mk), j) == want


@given(seeds, st.integers(1, 5), st.integers(1, 5))
def test_matching_is_deterministic_and_lexicographic(seed, n, m):
    mk = generate_random(seed, n, m, edge_density=0.7, value_range=(0, 2))
    a = max_weight_matching(mk, full_query(mk))
    b = max_weight_matching(mk, full_query(mk))
    assert a == b


@given(seeds, st.integers(1, 5), st.integers(2, 5))
def test_submodularity(seed, n, m):
    mk = generate_random(seed, n, m, edge_density=0.5)
    o = oracle_for(mk)
    W = lambda mask: o.welfare_int(o.base, mask)
    full = (1 << m) - 1
    for S in range(1 << m):
        for j in range(m):
            if S >> j & 1:
                continue
            gain_big = W(S | 1 << j) - W(S)
            sub = S
            while True:
                assert gain_big <= W(sub | 1 << j) - W(sub)
                if sub == 0:
                    break
                sub = (sub - 1) & S
    assert W(full) >= W(0)


@given(seeds, st.integers(1, 5), st.integers(1, 5), st.data())
def test_monotone_in_edges_and_sellers(seed, n, m, data):
    mk = generate_random(seed, n, m, edge_density=0.4)
    base = welfare(mk, full_query(mk))
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, m - 1))
    more = mk.with_edges(mk.edges | {(i, j)})
    assert welfare(more, full_query(more)) >= base
    fewer = WelfareQuery(frozenset(range(m)) - {j}, frozenset(range(n)))
    assert welfare(mk, fewer) <= base


@given(seeds, st.integers(1, 5), st.integers(1, 5))
def test_transacting_buyers_survive_platform_entry(seed, n, m):
    """Connecting previously edge-free sellers to everyone keeps B^G trading in some optimum."""
    mk = generate_random(seed, n, m, edge_density=0.5)
    isolated = [j for j in range(m) if not any((i, j) in mk.edges for i in range(n))]
    B_G = max_weight_matching(mk, full_query(mk)).transacting_buyers
    for r in range(len(isolated) + 1):
        for P in itertools.combinations(isolated, r):
            links = links_of(mk, P)
            best = brute_welfare(mk.values, links, range(m))
            # optimum restricted to matchings that keep every buyer of B^G matched
            options = [[None] + [i for i in range(n) if (i, j) in links] for j in range(m)]
            forced = Fraction(-1)
            for pick in itertools.product(*options):
                used = [i for i in pick if i is not None]
                if len(used) != len(set(used)) or not B_G <= set(used):
                    continue
                forced = max(forced, sum((mk.values[i][j] for j, i in enumerate(pick)
                                          if i is not None), Fraction(0)))
            assert forced == best
