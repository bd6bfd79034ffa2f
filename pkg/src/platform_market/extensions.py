"""Production costs, several competing platforms, and partition-matroid buyers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .game import PriceTable, pure_report, table_for
from .matching import oracle_for, optimal_welfare
from .model import (
    Allocation,
    EquilibriumReport,
    Market,
    PlatformScenario,
    TooLarge,
    format_rational,
    mask_of,
    members,
)

# --- production costs -------------------------------------------------------


@dataclass(frozen=True)
class CostTransform:
    """A market with costs, its cost-free image, and the dummy-buyer model.

    ``dummy`` appends one buyer per seller who values only that seller, at
    its cost, over an off-platform link; it has zero costs and represents
    the source market for price and welfare purposes.
    """

    source: Market
    target: Market
    dummy: Market
    beta: Fraction | float

    def to_json(self) -> dict:
        from .model import market_to_dict
        beta = "inf" if self.beta == math.inf else format_rational(self.beta)
        return {"target": market_to_dict(self.target), "beta": beta,
                "removed_edges": sorted(map(list, self.source.edges - self.target.edges))}


def apply_cost_transform(market: Market) -> CostTransform:
    """Subtract each seller's cost from every value; drop edges that go negative."""
    c = market.costs
    values = tuple(
        tuple(v - c[j] if v >= c[j] else Fraction(0) for j, v in enumerate(row))
        for row in market.values
    )
    edges = frozenset((i, j) for i, j in market.edges if market.values[i][j] >= c[j])
    target = Market(market.n, market.m, values, edges)
    dummy_rows = list(market.values)
    for j in range(market.m):
        dummy_rows.append(tuple(c[j] if k == j else Fraction(0) for k in range(market.m)))
    dummy_edges = set(market.edges) | {(market.n + j, j) for j in range(market.m)}
    dummy = Market(market.n + market.m, market.m, tuple(dummy_rows), frozenset(dummy_edges))
    total_cost = sum(c, Fraction(0))
    optimum = optimal_welfare(target)
    if total_cost == 0:
        beta = Fraction(0)
    elif optimum == 0:
        beta = math.inf
    else:
        beta = total_cost / optimum
    return CostTransform(market, target, dummy, beta)


def source_welfare(transform: CostTransform, joined: Iterable[int] = ()) -> Fraction:
    """Welfare net of costs in the source market, read off the dummy model."""
    dummy = transform.dummy
    oracle = oracle_for(dummy)
    return oracle.welfare(oracle.graph(mask_of(joined))) - sum(transform.source.costs, Fraction(0))


def source_to_target(transform: CostTransform, prices: Sequence[Fraction], alloc: Allocation):
    """Map a dummy-model equilibrium to the cost-free market: p' = max(p - c, 0), real trades only."""
    c = transform.source.costs
    shifted = tuple(max(p - c[j], Fraction(0)) for j, p in enumerate(prices))
    n = transform.source.n
    return shifted, Allocation(tuple((i, j) for i, j in alloc.pairs if i < n))


def target_to_source(transform: CostTransform, prices: Sequence[Fraction], alloc: Allocation):
    """Map a cost-free equilibrium back: p = p' + c, unsold sellers go to their dummy buyer."""
    c = transform.source.costs
    lifted = tuple(p + c[j] for j, p in enumerate(prices))
    n = transform.source.n
    sold = alloc.sellers
    pairs = list(alloc.pairs) + [(n + j, j) for j in range(transform.source.m) if j not in sold]
    return lifted, Allocation(tuple(pairs))


def join_condition(p_on: Fraction, p_off: Fraction, cost: Fraction, alpha: Fraction) -> bool:
    """Join iff (1 - a) p'_on >= p'_off + a c, with prices already net of cost."""
    return (1 - alpha) * p_on >= p_off + alpha * cost


def cost_join_check(scenario: PlatformScenario, P: Iterable[int], j: int) -> bool:
    """Whether seller ``j`` weakly prefers joining, given the others in ``P``, once costs count."""
    transform = apply_cost_transform(scenario.market)
    table = table_for(transform.target)
    on, off = table.on_off(mask_of(P), j)
    return join_condition(on, off, scenario.market.costs[j], scenario.alpha)


def _cost_equilibrium(table: PriceTable, costs, joined: int, alpha: Fraction) -> bool:
    for j in range(table.m):
        on, off = table.on_off(joined, j)
        joins = join_condition(on, off, costs[j], alpha)
        stays = off + alpha * costs[j] >= (1 - alpha) * on
        if joined >> j & 1 and not joins:
            return False
        if not joined >> j & 1 and not stays:
            return False
    return True


def enumerate_cost_equilibria(scenario: PlatformScenario, cap: int = 16) -> list[EquilibriumReport]:
    """Pure equilibria of a market with costs; welfare is net of costs."""
    market = scenario.market
    if market.m > cap:
        raise TooLarge(f"{market.m} sellers exceeds the enumeration cap of {cap}")
    transform = apply_cost_transform(market)
    table = table_for(transform.target)
    out = []
    for P in range(1 << market.m):
        if not _cost_equilibrium(table, market.costs, P, scenario.alpha):
            continue
        report = pure_report(table, P, scenario.alpha)
        lifted = tuple(p + market.costs[j] for j, p in enumerate(report.prices))
        revenue = scenario.alpha * sum((lifted[j] for j in members(P)), Fraction(0))
        utils = tuple((1 - scenario.alpha) * p - scenario.alpha * market.costs[j]
                      if P >> j & 1 else p for j, p in enumerate(report.prices))
        out.append(EquilibriumReport(report.profile, scenario.alpha, lifted, report.welfare,
                                     revenue, utils, True, ()))
    out.sort(key=lambda r: (r.welfare, sorted(r.profile.joined)))
    return out


class BoundVacuous(ValueError):
    pass


@dataclass(frozen=True)
class CostBoundReport:
    alpha: Fraction
    beta: Fraction
    optimum: Fraction
    bound: Fraction
    welfares: tuple[Fraction, ...]

    @property
    def ok(self) -> bool:
        return all(w >= self.bound for w in self.welfares)

    @property
    def worst_margin(self) -> Fraction | None:
        return min((w - self.bound for w in self.welfares), default=None)

    def to_json(self) -> dict:
        margin = self.worst_margin
        return {"alpha": format_rational(self.alpha), "beta": format_rational(self.beta),
                "optimum": format_rational(self.optimum), "bound": format_rational(self.bound),
                "equilibria": len(self.welfares), "ok": self.ok,
                "worst_margin": None if margin is None else format_rational(margin)}


def cost_bound_fraction(alpha: Fraction, beta: Fraction) -> Fraction:
    return (1 - alpha - alpha * beta) / (2 - alpha)


def verify_cost_poa(market: Market, alpha, equilibria: Sequence[EquilibriumReport] | None = None):
    """Every equilibrium welfare (net of costs) must reach (1-a-a*beta)/(2-a) of the optimum."""
    alpha = Fraction(alpha)
    transform = apply_cost_transform(market)
    beta = transform.beta
    if alpha >= 1 or beta == math.inf or 1 - alpha - alpha * beta <= 0:
        raise BoundVacuous(f"no welfare guarantee at fee {alpha} with cost share {beta}")
    if equilibria is None:
        equilibria = enumerate_cost_equilibria(PlatformScenario(market, alpha))
    optimum = optimal_welfare(transform.target)
    bound = cost_bound_fraction(alpha, beta) * optimum
    return CostBoundReport(alpha, beta, optimum, bound, tuple(r.welfare for r in equilibria))


# --- several platforms ------------------------------------------------------

FEE_RULES = ("platform_edges", "always")


@dataclass(frozen=True)
class MultiReport:
    strategies: tuple[frozenset[int], ...]
    prices: tuple[Fraction, ...]
    fees: tuple[Fraction, ...]
    welfare: Fraction
    revenue: Fraction
    utilities: tuple[Fraction, ...]
    is_equilibrium: bool
    certificate: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "strategies": [sorted(s) for s in self.strategies],
            "prices": [format_rational(p) for p in self.prices],
            "fees": [format_rational(f) for f in self.fees],
            "welfare": format_rational(self.welfare),
            "revenue": format_rational(self.revenue),
            "seller_utilities": [format_rational(u) for u in self.utilities],
            "is_equilibrium": self.is_equilibrium,
            "deviation_gains": [format_rational(g) for g in self.certificate],
        }


class MultiPlatformGame:
    """Sellers pick subsets of platforms; each platform reaches its own buyers.

    Under ``platform_edges`` a seller pays a fee only when its trade uses a
    link it lacks off-platform, and then to the cheapest joined platform
    that covers the buyer (ties: lowest platform index). ``always`` charges
    the cheapest joined platform on any trade, which for one all-buyer
    platform is the single-platform game.
    """

    def __init__(self, scenario: PlatformScenario, fee_rule: str = "platform_edges",
                 cap: int = 12):
        if fee_rule not in FEE_RULES:
            raise ValueError(f"unknown fee rule {fee_rule!r}")
        self.scenario = scenario
        self.market = scenario.market
        self.platforms = scenario.platforms
        self.R = len(self.platforms)
        if self.R * self.market.m > cap:
            raise TooLarge(f"{self.R} platforms x {self.market.m} sellers exceeds the cap {cap}")
        self.fee_rule = fee_rule
        self.oracle = oracle_for(self.market)
        self.reach = [mask_of(b) for b, _ in self.platforms]
        self.fee = [f for _, f in self.platforms]
        self._outcomes: dict = {}

    def graph(self, strategies: Sequence[int]) -> tuple[int, ...]:
        cols = list(self.market.adjacency)
        for j, s in enumerate(strategies):
            for r in range(self.R):
                if s >> r & 1:
                    cols[j] |= self.reach[r]
        return tuple(cols)

    def _fee_for(self, j: int, strategy: int, buyer: int | None) -> Fraction:
        if buyer is None or not strategy:
            return Fraction(0)
        joined = [r for r in range(self.R) if strategy >> r & 1]
        if self.fee_rule == "always":
            return min(self.fee[r] for r in joined)
        if self.market.has_edge(buyer, j):
            return Fraction(0)
        covering = [r for r in joined if self.reach[r] >> buyer & 1]
        if not covering:
            return Fraction(0)
        return self.fee[min(covering, key=lambda r: (self.fee[r], r))]

    def outcome(self, strategies: tuple[int, ...]):
        """Prices, fees, welfare and seller utilities for a strategy profile."""
        hit = self._outcomes.get(strategies)
        if hit is not None:
            return hit
        g = self.graph(strategies)
        o = self.oracle
        total = o.welfare_int(g)
        full = o.all_sellers
        prices = tuple(Fraction(total - o.welfare_int(g, full & ~(1 << j)), o.scale)
                       for j in range(self.market.m))
        sold_to = o.matching(g).allocation.seller_to_buyer
        fees = tuple(self._fee_for(j, strategies[j], sold_to.get(j))
                     for j in range(self.market.m))
        utils = tuple((1 - f) * p for f, p in zip(fees, prices))
        result = (prices, fees, Fraction(total, o.scale), utils)
        self._outcomes[strategies] = result
        return result

    def report(self, strategies: Sequence[int]) -> MultiReport:
        strategies = tuple(strategies)
        prices, fees, welfare, utils = self.outcome(strategies)
        gains = []
        for j in range(self.market.m):
            best = utils[j]
            for alt in range(1 << self.R):
                if alt == strategies[j]:
                    continue
                trial = strategies[:j] + (alt,) + strategies[j + 1:]
                best = max(best, self.outcome(trial)[3][j])
            gains.append(best - utils[j])
        revenue = sum((f * p for f, p in zip(fees, prices)), Fraction(0))
        return MultiReport(tuple(members(s) for s in strategies), prices, fees, welfare,
                           revenue, utils, all(g <= 0 for g in gains), tuple(gains))

    def profiles(self):
        return itertools.product(range(1 << self.R), repeat=self.market.m)

    def equilibria(self) -> list[MultiReport]:
        found = [r for r in map(self.report, self.profiles()) if r.is_equilibrium]
        found.sort(key=lambda r: (r.welfare, [sorted(s) for s in r.strategies]))
        return found


def build_multi_platform(scenario: PlatformScenario, fee_rule: str = "platform_edges",
                         cap: int = 12) -> MultiPlatformGame:
    if not scenario.platforms:
        raise ValueError("scenario lists no platforms")
    return MultiPlatformGame(scenario, fee_rule, cap)


# --- additive-over-partition buyers ----------------------------------------


@dataclass(frozen=True)
class PartitionBuyer:
    """Seller groups of one buyer, each with how many items it wants from the group."""

    groups: tuple[tuple[frozenset[int], int], ...]

    def __post_init__(self):
        groups = tuple((frozenset(s), int(k)) for s, k in self.groups)
        seen: set[int] = set()
        for sellers, cap in groups:
            if cap < 0:
                raise ValueError("group capacity must be non-negative")
            if seen & sellers:
                raise ValueError("seller groups must be disjoint")
            seen |= sellers
        object.__setattr__(self, "groups", groups)


@dataclass(frozen=True)
class Expansion:
    market: Market
    origin: tuple[tuple[int, int], ...]  # (original buyer, group index) per copy


def _partitions_for(market: Market, partitions: Mapping[int, PartitionBuyer]):
    unit = PartitionBuyer(((frozenset(range(market.m)), 1),))
    return [partitions.get(i, unit) for i in range(market.n)]


def expand_partition_buyers(market: Market, partitions: Mapping[int, PartitionBuyer]) -> Expansion:
    """One unit-demand copy per unit of group capacity.

    Each copy values its group's sellers like the original buyer, everyone
    else at 0, and keeps all of the original buyer's links. Buyers without
    an entry are plain unit-demand buyers.
    """
    rows, edges, origin = [], set(), []
    for i, pb in enumerate(_partitions_for(market, partitions)):
        for g, (sellers, cap) in enumerate(pb.groups):
            for _ in range(cap):
                k = len(rows)
                rows.append(tuple(v if j in sellers else Fraction(0)
                                  for j, v in enumerate(market.values[i])))
                edges.update((k, j) for j in range(market.m) if market.has_edge(i, j))
                origin.append((i, g))
    expanded = Market(len(rows), market.m, tuple(rows), frozenset(edges), market.costs)
    return Expansion(expanded, tuple(origin))


def partition_value(market: Market, pb: PartitionBuyer, i: int, bundle: Iterable[int]) -> Fraction:
    """Sum over groups of the best ``capacity`` items of the bundle in that group."""
    bundle = set(bundle)
    total = Fraction(0)
    for sellers, cap in pb.groups:
        vals = sorted((market.values[i][j] for j in bundle & sellers), reverse=True)
        total += sum(vals[:cap], Fraction(0))
    return total


def brute_force_partition_welfare(market: Market, partitions: Mapping[int, PartitionBuyer],
                                  edges: Iterable[tuple[int, int]] | None = None) -> Fraction:
    """Best assignment of each seller to at most one linked buyer, by exhaustion."""
    links = market.edges if edges is None else frozenset(edges)
    pbs = _partitions_for(market, partitions)
    choices = [[None] + [i for i in range(market.n) if (i, j) in links] for j in range(market.m)]
    best = Fraction(0)
    for assign in itertools.product(*choices):
        bundles: dict[int, list[int]] = {}
        for j, i in enumerate(assign):
            if i is not None:
                bundles.setdefault(i, []).append(j)
        value = sum((partition_value(market, pbs[i], i, b) for i, b in bundles.items()),
                    Fraction(0))
        best = max(best, value)
    return best


def parse_partitions(raw: Iterable[Mapping]) -> dict[int, PartitionBuyer]:
    """Read ``[{"buyer": i, "groups": [{"sellers": [...], "capacity": k}]}]``."""
    out = {}
    for entry in raw:
        groups = tuple((frozenset(g["sellers"]), int(g["capacity"])) for g in entry["groups"])
        out[int(entry["buyer"])] = PartitionBuyer(groups)
    return out

