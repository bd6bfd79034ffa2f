"""Exact max-weight bipartite matching and the welfare function W(S, B, G).

Values are rescaled to integers by the common denominator of the market, so
the assignment solver runs on Python ints and stays exact.

Graphs are passed around as *column masks*: a tuple with one int per seller
whose bit ``i`` is set when buyer ``i`` is linked to that seller.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

from .model import Allocation, Market, mask_of, members

_INF = float("inf")


def solve_assignment(weights: list[list[int]]) -> tuple[int, list[int]]:
    """Maximum-weight assignment on a rectangular matrix of non-negative ints.

    Returns ``(total, row_to_col)`` with ``-1`` for unassigned rows. Uses the
    shortest augmenting path form of the Hungarian method on the square
    zero-padded matrix.
    """
    rows = len(weights)
    cols = len(weights[0]) if rows else 0
    k = max(rows, cols)
    if k == 0:
        return 0, []
    cost = [[0] * k for _ in range(k)]
    for r in range(rows):
        wr = weights[r]
        cr = cost[r]
        for c in range(cols):
            cr[c] = -wr[c]
    u = [0] * (k + 1)
    v = [0] * (k + 1)
    p = [0] * (k + 1)
    way = [0] * (k + 1)
    for i in range(1, k + 1):
        p[0] = i
        j0 = 0
        minv = [_INF] * (k + 1)
        used = [False] * (k + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = cost[i0 - 1]
            ui0 = u[i0]
            delta = _INF
            j1 = 0
            for j in range(1, k + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(k + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = [-1] * rows
    total = 0
    for j in range(1, k + 1):
        r = p[j] - 1
        if r < rows and j - 1 < cols:
            row_to_col[r] = j - 1
            total += weights[r][j - 1]
    return total, row_to_col


def full_mask(count: int) -> int:
    return (1 << count) - 1


def rewire(adjacency: tuple[int, ...], joined: int, n: int) -> tuple[int, ...]:
    """Column masks of G(P): sellers in ``joined`` are linked to every buyer."""
    everyone = full_mask(n)
    return tuple(everyone if joined >> j & 1 else col for j, col in enumerate(adjacency))


@dataclass(frozen=True)
class WelfareQuery:
    """Which sellers and buyers take part, and over which graph.

    ``graph`` is a tuple of column masks; ``None`` means the market's own
    off-platform graph. ``joined`` rewires those sellers to all buyers.
    """

    sellers: frozenset[int]
    buyers: frozenset[int]
    graph: tuple[int, ...] | None = None
    joined: frozenset[int] = frozenset()


@dataclass(frozen=True)
class MatchingResult:
    welfare: Fraction
    allocation: Allocation
    transacting_buyers: frozenset[int]
    transacting_sellers: frozenset[int]


class WelfareOracle:
    """Memoized W(S, B, G) for one market.

    Keys are normalized (columns of absent sellers and rows of absent buyers
    are zeroed) so that, e.g., W(S minus j, G(P)) and W(S minus j, G(P minus j))
    share a cache entry.
    """

    def __init__(self, market: Market):
        self.market = market
        self.n = market.n
        self.m = market.m
        denominators = [v.denominator for row in market.values for v in row]
        self.scale = math.lcm(*denominators) if denominators else 1
        self.weights = [[int(v * self.scale) for v in row] for row in market.values]
        self.base = market.adjacency
        self.all_buyers = full_mask(self.n)
        self.all_sellers = full_mask(self.m)
        self._cache: dict = {}
        self._lock = threading.Lock()

    def graph(self, joined: int = 0) -> tuple[int, ...]:
        return rewire(self.base, joined, self.n) if joined else self.base

    def complete_graph(self) -> tuple[int, ...]:
        return (self.all_buyers,) * self.m

    def welfare_int(self, graph: tuple[int, ...], sellers: int | None = None,
                    buyers: int | None = None, duplicate: int = -1) -> int:
        """Scaled optimal welfare; ``duplicate`` adds a second copy of that seller."""
        if sellers is None:
            sellers = self.all_sellers
        if buyers is None:
            buyers = self.all_buyers
        key = (tuple(col & buyers if sellers >> j & 1 else 0 for j, col in enumerate(graph)),
               duplicate)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        cols = [(j, col) for j, (col) in enumerate(key[0]) if col]
        if duplicate >= 0 and key[0][duplicate]:
            cols.append((duplicate, key[0][duplicate]))
        value = self._solve(cols)
        with self._lock:
            self._cache[key] = value
        return value

    def welfare(self, graph, sellers=None, buyers=None, duplicate=-1) -> Fraction:
        return Fraction(self.welfare_int(graph, sellers, buyers, duplicate), self.scale)

    def _solve(self, cols: list[tuple[int, int]]) -> int:
        if not cols:
            return 0
        w = self.weights
        row_mask = 0
        for _, col in cols:
            row_mask |= col
        buyer_list = list(members(row_mask))
        if len(cols) == 1:
            j, col = cols[0]
            return max(w[i][j] for i in buyer_list if col >> i & 1)
        if len(buyer_list) == 1:
            i = buyer_list[0]
            return max(w[i][j] for j, _ in cols)
        matrix = [[w[i][j] if col >> i & 1 else 0 for j, col in cols] for i in buyer_list]
        total, _ = solve_assignment(matrix)
        return total

    def matching(self, graph, sellers=None, buyers=None) -> MatchingResult:
        """Optimal matching with a deterministic tie-break.

        Among welfare-optimal matchings, buyer 0 gets the lowest-index seller
        it can have (being matched beats being unmatched), then buyer 1, and
        so on. Zero-value edges may be used.
        """
        if sellers is None:
            sellers = self.all_sellers
        if buyers is None:
            buyers = self.all_buyers
        seller_list = sorted(members(sellers))
        buyer_list = sorted(members(buyers))
        if not seller_list or not buyer_list:
            return MatchingResult(Fraction(0), Allocation(), frozenset(), frozenset())
        nb, ms = len(buyer_list), len(seller_list)
        base = ms + 1
        # lexicographic preference encoded as a perturbation below one unit of welfare
        bonus_scale = base ** nb
        matrix = []
        for r, i in enumerate(buyer_list):
            place = base ** (nb - 1 - r)
            row = []
            for c, j in enumerate(seller_list):
                if graph[j] >> i & 1:
                    row.append(self.weights[i][j] * bonus_scale + (ms - c) * place)
                else:
                    row.append(0)
            matrix.append(row)
        _, assignment = solve_assignment(matrix)
        pairs = []
        total = 0
        for r, c in enumerate(assignment):
            if c < 0:
                continue
            i, j = buyer_list[r], seller_list[c]
            if graph[j] >> i & 1:
                pairs.append((i, j))
                total += self.weights[i][j]
        alloc = Allocation(tuple(pairs))
        return MatchingResult(Fraction(total, self.scale), alloc, alloc.buyers, alloc.sellers)


_ORACLES: dict[int, tuple[Market, WelfareOracle]] = {}


def oracle_for(market: Market) -> WelfareOracle:
    """Shared oracle per market object so repeated calls reuse the cache."""
    entry = _ORACLES.get(id(market))
    if entry is not None and entry[0] is market:
        return entry[1]
    if len(_ORACLES) > 256:
        _ORACLES.clear()
    oracle = WelfareOracle(market)
    _ORACLES[id(market)] = (market, oracle)
    return oracle


def _query_graph(oracle: WelfareOracle, q: WelfareQuery) -> tuple[int, ...]:
    graph = q.graph if q.graph is not None else oracle.base
    if q.joined:
        graph = rewire(graph, mask_of(q.joined), oracle.n)
    return graph


def max_weight_matching(market: Market, q: WelfareQuery) -> MatchingResult:
    oracle = oracle_for(market)
    return oracle.matching(_query_graph(oracle, q), mask_of(q.sellers), mask_of(q.buyers))


class SellerNotInQuery(ValueError):
    pass


def welfare_with_duplicate(market: Market, q: WelfareQuery, j: int) -> Fraction:
    """W of the market with a second copy of seller ``j`` (same edges, same values)."""
    if j not in q.sellers:
        raise SellerNotInQuery(f"seller {j} is not part of the query")
    oracle = oracle_for(market)
    return oracle.welfare(_query_graph(oracle, q), mask_of(q.sellers), mask_of(q.buyers), j)


def welfare(market: Market, q: WelfareQuery) -> Fraction:
    oracle = oracle_for(market)
    return oracle.welfare(_query_graph(oracle, q), mask_of(q.sellers), mask_of(q.buyers))


def full_query(market: Market, joined=frozenset(), graph=None) -> WelfareQuery:
    return WelfareQuery(frozenset(range(market.m)), frozenset(range(market.n)), graph,
                        frozenset(joined))


def optimal_welfare(market: Market) -> Fraction:
    """W* on the complete bipartite graph."""
    oracle = oracle_for(market)
    return oracle.welfare(oracle.complete_graph())
