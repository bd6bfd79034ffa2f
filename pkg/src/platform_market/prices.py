"""Competitive prices from welfare differences, and the equilibrium checker."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .matching import WelfareOracle, oracle_for, rewire
from .model import Allocation, Market, NotHomogeneous, mask_of


class LengthMismatch(ValueError):
    pass


def _graph_masks(market: Market, graph) -> tuple[int, ...]:
    """Accept ``None`` (off-platform graph), a set of joined sellers, or column masks."""
    if graph is None:
        return market.adjacency
    if isinstance(graph, (set, frozenset)):
        return rewire(market.adjacency, mask_of(graph), market.n)
    return tuple(graph)


def max_prices_in(oracle: WelfareOracle, graph: tuple[int, ...]) -> tuple[Fraction, ...]:
    everyone = oracle.welfare_int(graph)
    full = oracle.all_sellers
    return tuple(
        Fraction(everyone - oracle.welfare_int(graph, full & ~(1 << j)), oracle.scale)
        for j in range(oracle.m)
    )


def min_prices_in(oracle: WelfareOracle, graph: tuple[int, ...]) -> tuple[Fraction, ...]:
    everyone = oracle.welfare_int(graph)
    return tuple(
        Fraction(oracle.welfare_int(graph, duplicate=j) - everyone, oracle.scale)
        for j in range(oracle.m)
    )


def max_prices(market: Market, graph=None) -> tuple[Fraction, ...]:
    """Top of the competitive price lattice: W(S) - W(S minus j) per seller."""
    return max_prices_in(oracle_for(market), _graph_masks(market, graph))


def min_prices(market: Market, graph=None) -> tuple[Fraction, ...]:
    """Bottom of the lattice: W(S plus a copy of j) - W(S) per seller."""
    return min_prices_in(oracle_for(market), _graph_masks(market, graph))


@dataclass(frozen=True)
class Violation:
    rule: str
    agents: tuple

    def __str__(self):
        return f"{self.rule}: {self.agents}"


def check_competitive_equilibrium(
    market: Market, graph, prices: Sequence[Fraction], alloc: Allocation
) -> tuple[bool, list[Violation]]:
    """Check every condition of a competitive equilibrium; report all failures.

    Buyer optimality is checked against linked sellers only; an unlinked
    seller is out of reach and behaves like a zero-value option.
    """
    masks = _graph_masks(market, graph)
    if len(prices) != market.m:
        raise LengthMismatch(f"expected {market.m} prices, got {len(prices)}")
    out: list[Violation] = []
    for j, p in enumerate(prices):
        if p < 0:
            out.append(Violation("prices are non-negative", (j,)))
    for i, j in alloc.pairs:
        if not (0 <= i < market.n and 0 <= j < market.m) or not masks[j] >> i & 1:
            out.append(Violation("transactions must respect links", (i, j)))
    seen_b: dict[int, int] = {}
    seen_s: dict[int, int] = {}
    for i, j in alloc.pairs:
        if i in seen_b:
            out.append(Violation("buyers are allocated at most one good", (i,)))
        if j in seen_s:
            out.append(Violation("goods are sold at most once", (j,)))
        seen_b[i] = j
        seen_s[j] = i
    utility = {}
    for i in range(market.n):
        j = seen_b.get(i)
        utility[i] = market.values[i][j] - prices[j] if j is not None and j < market.m else Fraction(0)
    for i in range(market.n):
        for j in range(market.m):
            if masks[j] >> i & 1 and market.values[i][j] - prices[j] > utility[i]:
                out.append(Violation("buyers get their most preferred outcome", (i, j)))
        if utility[i] < 0:
            out.append(Violation("buyers have non-negative utility", (i,)))
    for j in range(market.m):
        if j not in seen_s and prices[j] != 0:
            out.append(Violation("unassigned goods have price 0", (j,)))
    return not out, out


def lattice_meet_join(p1: Sequence[Fraction], p2: Sequence[Fraction]):
    """Coordinate-wise minimum and maximum of two price vectors."""
    if len(p1) != len(p2):
        raise LengthMismatch("price vectors differ in length")
    meet = tuple(min(a, b) for a, b in zip(p1, p2))
    join = tuple(max(a, b) for a, b in zip(p1, p2))
    return meet, join


def opportunity_reachable(market: Market, graph, alloc: Allocation, start_buyer: int):
    """Buyers reachable from ``start_buyer`` along opportunity paths.

    A path steps from a buyer to a linked seller it does not buy from, then
    to the buyer that seller sells to. Returns ``(reachable, reaches_unsold)``
    where the second flag says some path hits a seller that sells nothing.
    """
    if not market.homogeneous:
        raise NotHomogeneous("opportunity paths are defined for homogeneous goods")
    masks = _graph_masks(market, graph)
    owner = alloc.seller_to_buyer
    holds = alloc.buyer_to_seller
    reachable = {start_buyer}
    reaches_unsold = False
    queue = deque([start_buyer])
    while queue:
        i = queue.popleft()
        for j in range(market.m):
            if not masks[j] >> i & 1 or holds.get(i) == j:
                continue
            nxt = owner.get(j)
            if nxt is None:
                reaches_unsold = True
            elif nxt not in reachable:
                reachable.add(nxt)
                queue.append(nxt)
    return frozenset(reachable), reaches_unsold


def path_price(market: Market, graph, alloc: Allocation, buyer: int) -> Fraction:
    """Max price of the seller serving ``buyer``, read off its opportunity paths."""
    reachable, unsold = opportunity_reachable(market, graph, alloc, buyer)
    if unsold:
        return Fraction(0)
    return min(market.buyer_value(i) for i in reachable)
