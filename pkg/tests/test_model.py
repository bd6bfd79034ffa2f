from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from platform_market.fixtures import generate_fixture, generate_random
from platform_market.model import (
    Allocation,
    BadRational,
    DimensionMismatch,
    Market,
    MixedProfile,
    NegativeValue,
    PlatformScenario,
    make_market,
    market_to_dict,
    members,
    mask_of,
    parse_rational,
    validate_market,
)


def single(value="5", cost="0"):
    return {"buyers": [{"id": 0}], "sellers": [{"id": 0, "cost": cost}],
            "values": [[value]], "edges": [[0, 0]]}


def test_single_pair_is_homogeneous():
    m = validate_market(single())
    assert (m.n, m.m) == (1, 1)
    assert m.values[0][0] == 5
    assert m.homogeneous


def test_fig1_values_parse_exactly_and_are_heterogeneous():
    m = generate_fixture("fig1").market
    assert m.values[1][0] == Fraction(61, 20)
    nonzero = sorted(v for row in m.values for v in row if v)
    assert nonzero == sorted(map(Fraction, ["1", "1", "1", "3.05", "1.15", "1.1", "0.05"]))
    assert not m.homogeneous


def test_negative_value_rejected():
    with pytest.raises(NegativeValue):
        validate_market(single("-1"))


def test_negative_cost_rejected():
    with pytest.raises(NegativeValue):
        validate_market(single(cost="-1/2"))


@pytest.mark.parametrize("text", ["abc", "1/0", "", None, True, [1]])
def test_bad_rationals(text):
    with pytest.raises(BadRational):
        parse_rational(text)


def test_decimal_strings_are_exact():
    assert parse_rational("3.05") == Fraction(61, 20)
    assert parse_rational(" 7/14 ") == Fraction(1, 2)
    assert parse_rational(0.1) == Fraction(1, 10)


def test_dimension_checks():
    raw = single()
    raw["values"] = [["1", "2"]]
    with pytest.raises(DimensionMismatch):
        validate_market(raw)
    raw = single()
    raw["edges"] = [[0, 3]]
    with pytest.raises(DimensionMismatch):
        validate_market(raw)
    raw = single()
    raw["buyers"] = [{"id": 0}, {"id": 0}]
    raw["values"] = [["1"], ["1"]]
    with pytest.raises(DimensionMismatch):
        validate_market(raw)


def test_ids_map_to_positions():
    raw = {"buyers": [{"id": 7}, {"id": 3}], "sellers": [{"id": "s", "cost": "1/3"}],
           "values": [["1"], ["2"]], "edges": [[3, "s"]]}
    m = validate_market(raw)
    assert m.edges == {(1, 0)}
    assert m.costs == (Fraction(1, 3),)


def test_edge_free_seller_is_legal():
    m = make_market([[1, 1]], edges=[(0, 0)])
    assert m.adjacency == (1, 0)


@given(st.integers(0, 10_000), st.booleans())
def test_round_trip(seed, homogeneous):
    m = generate_random(seed, 3, 4, homogeneous=homogeneous, cost_range=(0, 2), denominator=3)
    again = validate_market(market_to_dict(m))
    assert again == m
    assert again.homogeneous == m.homogeneous


@given(st.integers(0, 10_000))
def test_homogeneous_generator_sets_flag(seed):
    assert generate_random(seed, 4, 3, homogeneous=True).homogeneous


def test_fixture_homogeneity_flags():
    assert generate_fixture("fig2", n=4).market.homogeneous
    for name in ("fig1", "fig3", "fig4"):
        assert not generate_fixture(name).market.homogeneous


def test_market_is_immutable():
    m = make_market([[1]], [(0, 0)])
    with pytest.raises(AttributeError):
        m.n = 3


def test_allocation_helpers():
    a = Allocation(((2, 1), (0, 0)))
    assert a.pairs == ((0, 0), (2, 1))
    assert a.seller_to_buyer == {0: 0, 1: 2}
    assert a.is_valid()
    assert not Allocation(((0, 0), (0, 1))).is_valid()


def test_profiles_and_scenarios_validate():
    with pytest.raises(ValueError):
        MixedProfile((Fraction(3, 2),))
    m = make_market([[1]], [(0, 0)])
    with pytest.raises(ValueError):
        PlatformScenario(m, Fraction(2))
    with pytest.raises(ValueError):
        PlatformScenario(m, Fraction(1, 4), ((frozenset({0}), Fraction(1, 2)),))


def test_masks():
    assert members(mask_of([0, 3])) == {0, 3}
    assert mask_of([]) == 0


def test_market_direct_construction_checks_shape():
    with pytest.raises(DimensionMismatch):
        Market(2, 1, ((Fraction(1),),), frozenset())
