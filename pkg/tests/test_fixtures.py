import json
from fractions import Fraction

import pytest

from platform_market.fixtures import (
    BadParams,
    UnknownFixture,
    generate_fixture,
    generate_random,
    harmonic,
)
from platform_market.game import enumerate_pure_equilibria
from platform_market.model import PlatformScenario
from platform_market.optimizer import price_of_anarchy


def test_fig1_values():
    m = generate_fixture("fig1").market
    nonzero = sorted(v for row in m.values for v in row if v)
    assert nonzero == sorted(map(Fraction, ["1", "1", "1", "3.05", "1.15", "1.1", "0.05"]))


def test_fig3_cross_value():
    m = generate_fixture("fig3", alpha=Fraction(1, 2), eps=Fraction(1, 1000)).market
    assert m.values[1][0] == m.values[0][2] == m.values[2][1] == 3 - Fraction(1, 1000)


def test_fig4_shifted_values():
    m = generate_fixture("fig4", n=4, x=10**4).market
    for j in range(3):
        assert m.values[j + 1][j] == Fraction(4 * 10**4, 3)
    assert m.values[1][3] == 10**4 and m.values[0][3] == 1


def test_fig2_top_values():
    m = generate_fixture("fig2", n=4, eps=Fraction(1, 1000)).market
    assert [row[0] for row in m.values] == [4 + Fraction(1, 1000), 2, Fraction(4, 3), 1]
    assert not m.edges and m.homogeneous


def test_string_parameters_are_parsed():
    a = generate_fixture("fig2", n=3, eps="1/1000").market
    b = generate_fixture("fig2", n=3, eps=Fraction(1, 1000)).market
    assert a == b


def test_fixture_json_is_reproducible():
    one = json.dumps(generate_fixture("fig4").to_json())
    two = json.dumps(generate_fixture("fig4").to_json())
    assert one == two


def test_unknown_and_bad():
    with pytest.raises(UnknownFixture):
        generate_fixture("fig9")
    with pytest.raises(BadParams):
        generate_fixture("fig3", alpha=1)
    with pytest.raises(BadParams):
        generate_fixture("fig2", n=0)


def test_random_is_seeded():
    assert generate_random(7, 4, 3) == generate_random(7, 4, 3)
    assert generate_random(7, 4, 3) != generate_random(8, 4, 3)


def test_density_extremes():
    assert not generate_random(1, 4, 4, edge_density=0).edges
    full = generate_random(1, 4, 4, edge_density=1)
    assert len(full.edges) == 16
    for alpha in (Fraction(0), Fraction(1, 2), Fraction(1)):
        eqs = enumerate_pure_equilibria(PlatformScenario(full, alpha))
        assert price_of_anarchy(full, alpha, eqs).ratio == 1


def test_homogeneous_rows():
    m = generate_random(3, 5, 4, homogeneous=True)
    assert m.homogeneous
    assert all(len(set(row)) == 1 for row in m.values)


def test_bad_density():
    with pytest.raises(BadParams):
        generate_random(0, 2, 2, edge_density=1.5)


def test_harmonic():
    assert harmonic(3) == Fraction(11, 6)
