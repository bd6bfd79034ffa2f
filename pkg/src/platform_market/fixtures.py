"""Named instances from the literature and seeded random markets."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Market, format_rational, market_to_dict, parse_rational


class UnknownFixture(KeyError):
    pass


class BadParams(ValueError):
    pass


def harmonic(k: int) -> Fraction:
    return sum((Fraction(1, i) for i in range(1, k + 1)), Fraction(0))


@dataclass(frozen=True)
class Fixture:
    name: str
    market: Market
    provenance: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "provenance": self.provenance,
            "params": {k: format_rational(v) if isinstance(v, Fraction) else v
                       for k, v in sorted(self.params.items())},
            "market": market_to_dict(self.market),
        }


def _grid(n, m):
    return [[Fraction(0)] * m for _ in range(n)]


def _build(rows, edges):
    return Market(len(rows), len(rows[0]) if rows else 0, tuple(map(tuple, rows)),
                  frozenset(edges))


def fig1(**_) -> Fixture:
    # buyers A..D = 0..3, sellers a..c = 0..2
    v = _grid(4, 3)
    for k in range(3):
        v[k][k] = Fraction(1)
    v[1][0] = Fraction("3.05")
    v[1][2] = Fraction("1.15")
    v[2][1] = Fraction("1.1")
    v[3][2] = Fraction("0.05")
    return Fixture("fig1", _build(v, [(0, 0), (1, 1), (2, 2)]),
                   "no pure equilibrium at fee 1/2", {})


def fig2(n=3, eps=Fraction(1, 1000), **_) -> Fixture:
    n = int(n)
    eps = Fraction(eps)
    if n < 1 or eps < 0:
        raise BadParams("fig2 needs n >= 1 and eps >= 0")
    top = [Fraction(n) + eps] + [Fraction(n, i) for i in range(2, n + 1)]
    rows = [[top[i]] * n for i in range(n)]
    return Fixture("fig2", _build(rows, []), "homogeneous market with harmonic PoA",
                   {"n": n, "eps": eps})


def fig3(alpha=Fraction(1, 2), eps=Fraction(1, 1000), **_) -> Fixture:
    alpha = Fraction(alpha)
    eps = Fraction(eps)
    if not 0 <= alpha < 1 or eps < 0:
        raise BadParams("fig3 needs 0 <= alpha < 1 and eps >= 0")
    cross = (2 - alpha) / (1 - alpha) - eps
    if cross < 0:
        raise BadParams("eps too large for fig3")
    v = _grid(3, 3)
    for k in range(3):
        v[k][k] = Fraction(1)
    v[1][0] = v[0][2] = v[2][1] = cross
    return Fixture("fig3", _build(v, [(0, 0), (1, 1), (2, 2)]),
                   "tight regulated PoA instance", {"alpha": alpha, "eps": eps})


def fig4(n=4, x=10**4, eps=Fraction(1, 10**6), **_) -> Fixture:
    n = int(n)
    x = Fraction(x)
    eps = Fraction(eps)
    if n < 2 or x <= 0 or eps < 0:
        raise BadParams("fig4 needs n >= 2, x > 0, eps >= 0")
    v = _grid(n, n)
    cross = Fraction(n) * x / (n - 1)
    v[0][0] = (cross + n) / (x + n)
    for i in range(1, n - 1):
        v[i][i] = Fraction(n * n) * x / ((n - 1) * (x + n)) + i * eps
    for j in range(n - 1):
        v[j + 1][j] = cross
    v[0][n - 1] = Fraction(1)
    for i in range(1, n):
        v[i][n - 1] = x
    if any(val < 0 for row in v for val in row):
        raise BadParams("eps too large for fig4")
    return Fixture("fig4", _build(v, [(i, i) for i in range(n - 1)]),
                   "general-valuation PoA close to n", {"n": n, "x": x, "eps": eps})


def fig5(eps=Fraction(1, 1000), height=10**3, **_) -> Fixture:
    eps = Fraction(eps)
    height = Fraction(height)
    if eps < 0 or height < 0:
        raise BadParams("fig5 needs non-negative eps and height")
    v = _grid(4, 4)
    for k in range(4):
        v[k][k] = Fraction(1)
    v[0][1] = eps
    v[2][3] = Fraction(1)
    v[1][0] = Fraction(3)
    v[3][2] = height
    edges = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (2, 3)]
    return Fixture("fig5", _build(v, edges), "min-price clearing pathology",
                   {"eps": eps, "height": height})


FIXTURES = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5}


def generate_fixture(name: str, **params) -> Fixture:
    try:
        builder = FIXTURES[name]
    except KeyError:
        raise UnknownFixture(name) from None
    try:
        clean = {k: (parse_rational(v) if isinstance(v, str) else v)
                 for k, v in params.items() if v is not None}
        return builder(**clean)
    except (TypeError, ZeroDivisionError) as exc:
        raise BadParams(str(exc)) from exc


def generate_random(seed: int, n: int, m: int, homogeneous: bool = False,
                    edge_density: float = 0.5, value_range=(0, 10),
                    denominator: int = 1, cost_range=None) -> Market:
    """Seeded random market with values on a grid of step ``1/denominator``.

    Integer-valued defaults keep ties common, which is where equilibrium
    code tends to break.
    """
    if not 0 <= edge_density <= 1:
        raise BadParams("edge density must lie in [0, 1]")
    lo, hi = value_range
    rng = random.Random(seed)

    def draw(a, b):
        return Fraction(rng.randint(int(a * denominator), int(b * denominator)), denominator)

    if homogeneous:
        rows = []
        for _ in range(n):
            val = draw(lo, hi)
            rows.append([val] * m)
    else:
        rows = [[draw(lo, hi) for _ in range(m)] for _ in range(n)]
    edges = {(i, j) for i in range(n) for j in range(m) if rng.random() < edge_density}
    costs = ()
    if cost_range is not None:
        costs = tuple(draw(*cost_range) for _ in range(m))
    return Market(n, m, tuple(map(tuple, rows)), frozenset(edges), costs)
