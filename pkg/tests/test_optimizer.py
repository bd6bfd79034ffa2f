import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_welfare, harmonic, links_of
from platform_market.fixtures import generate_fixture, generate_random
from platform_market.game import check_pure_equilibrium, enumerate_pure_equilibria
from platform_market.model import Market, PlatformScenario, PureProfile, make_market
from platform_market.optimizer import (
    AlphaOne,
    EmptyEquilibriumList,
    optimize_alpha,
    price_of_anarchy,
    revenue_of,
    verify_welfare_bounds,
    welfare_fraction,
)

HALF = Fraction(1, 2)
EPS = Fraction(1, 1000)


def test_revenue_of_pure_and_empty():
    sc = PlatformScenario(generate_fixture("fig2", n=3, eps=EPS).market, HALF)
    assert revenue_of(sc, set()) == 0
    assert revenue_of(sc, PureProfile(frozenset({0}))) == HALF * (3 + EPS)


@pytest.mark.parametrize("n", [3, 5])
def test_fig2_optimum(n):
    market = generate_fixture("fig2", n=n, eps=EPS).market
    res = optimize_alpha(market)
    assert res.alpha_star == 1
    assert len(res.best_profile.joined) == 1
    assert res.revenue == n + EPS
    poa = price_of_anarchy(market, 1, res.optimal_equilibria)
    assert poa.ratio == (n * harmonic(n) + EPS) / (n + EPS)


def test_fig4_optimum():
    res = optimize_alpha(generate_fixture("fig4").market)
    assert res.alpha_star == 1 and res.best_profile.joined == {3}
    assert res.revenue == 10**4


def test_all_zero_market():
    m = make_market([[0, 0], [0, 0]], [(0, 0)])
    res = optimize_alpha(m)
    assert res.revenue == 0


def test_no_sellers():
    res = optimize_alpha(Market(1, 0, ((),), frozenset()))
    assert res.revenue == 0


def test_bad_mode():
    with pytest.raises(ValueError):
        optimize_alpha(generate_fixture("fig1").market, mode="greedy")


def test_pessimistic_never_beats_optimistic():
    m = generate_fixture("fig3", alpha=HALF).market
    assert (optimize_alpha(m, mode="pessimistic").revenue
            <= optimize_alpha(m, mode="optimistic").revenue)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4),
       st.sampled_from([Fraction(1, 5), Fraction(1, 2), Fraction(4, 5)]))
def test_cap_and_revenue_bound(seed, n, m, cap):
    mk = generate_random(seed, n, m)
    res = optimize_alpha(mk, cap=cap)
    assert res.alpha_star <= cap
    if res.best_profile is not None:
        assert res.revenue <= res.alpha_star * res.welfare_at_best
        sc = PlatformScenario(mk, res.alpha_star)
        assert check_pure_equilibrium(sc, res.best_profile.joined).is_equilibrium


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_optimum_beats_every_grid_point(seed, n, m):
    mk = generate_random(seed, n, m)
    res = optimize_alpha(mk)
    for k in range(21):
        alpha = Fraction(k, 20)
        for r in enumerate_pure_equilibria(PlatformScenario(mk, alpha)):
            assert r.revenue <= res.revenue


def test_poa_complete_graph_is_one():
    m = make_market([[3, 1], [2, 2]], [(i, j) for i in range(2) for j in range(2)])
    eqs = enumerate_pure_equilibria(PlatformScenario(m, HALF))
    assert price_of_anarchy(m, HALF, eqs).ratio == 1


def test_poa_infinite_when_nothing_trades():
    m = make_market([[5]], [])
    eqs = enumerate_pure_equilibria(PlatformScenario(m, Fraction(1)))
    assert frozenset() in {r.profile.joined for r in eqs}
    assert price_of_anarchy(m, 1, eqs).ratio == math.inf


def test_poa_empty_list():
    with pytest.raises(EmptyEquilibriumList):
        price_of_anarchy(make_market([[1]], []), HALF, [])


def test_fig3_bound_margin_is_tight():
    alpha = Fraction(1, 10)
    m = generate_fixture("fig3", alpha=alpha, eps=EPS).market
    eqs = enumerate_pure_equilibria(PlatformScenario(m, alpha))
    report = verify_welfare_bounds(m, alpha, eqs)
    assert report.ok
    empty = next(c for c in report.checks if not c.profile.joined)
    ideal = 3 * ((2 - alpha) / (1 - alpha) - EPS)
    assert report.optimum == ideal
    assert empty.welfare_margin == 3 - welfare_fraction(alpha) * ideal


def test_bound_rejects_fee_one():
    with pytest.raises(AlphaOne):
        verify_welfare_bounds(make_market([[1]], []), 1, [])


def test_zero_fee_bound_is_half():
    m = generate_fixture("fig1").market
    eqs = enumerate_pure_equilibria(PlatformScenario(m, Fraction(0)))
    report = verify_welfare_bounds(m, 0, eqs)
    assert welfare_fraction(Fraction(0)) == HALF and report.ok


def test_ideal_matches_brute_force():
    m = generate_fixture("fig1").market
    eqs = enumerate_pure_equilibria(PlatformScenario(m, Fraction(0)))
    links = links_of(m, range(m.m))
    assert price_of_anarchy(m, 0, eqs).ideal == brute_welfare(m.values, links, range(m.m))
