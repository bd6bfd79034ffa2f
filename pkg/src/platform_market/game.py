"""The sellers' join-or-stay game at a fixed platform fee."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .matching import WelfareOracle, oracle_for
from .model import (
    ENUMERATION_CAP,
    EquilibriumReport,
    Market,
    NotHomogeneous,
    PlatformScenario,
    PureProfile,
    TooLarge,
    mask_of,
    members,
)

PRICE_RULES = ("max", "min")


class PriceTable:
    """Competitive prices of every seller for every joined set, memoized.

    Prices are kept as ints scaled by ``oracle.scale``; public accessors
    return Fractions.
    """

    def __init__(self, market: Market, rule: str = "max"):
        if rule not in PRICE_RULES:
            raise ValueError(f"unknown price rule {rule!r}")
        self.market = market
        self.rule = rule
        self.oracle: WelfareOracle = oracle_for(market)
        self.m = market.m
        self._prices: dict[int, tuple[int, ...]] = {}
        self._welfare: dict[int, int] = {}

    def scaled(self, joined: int) -> tuple[int, ...]:
        hit = self._prices.get(joined)
        if hit is not None:
            return hit
        o = self.oracle
        graph = o.graph(joined)
        total = o.welfare_int(graph)
        if self.rule == "max":
            full = o.all_sellers
            row = tuple(total - o.welfare_int(graph, full & ~(1 << j)) for j in range(self.m))
        else:
            row = tuple(o.welfare_int(graph, duplicate=j) - total for j in range(self.m))
        self._prices[joined] = row
        self._welfare[joined] = total
        return row

    def welfare_scaled(self, joined: int) -> int:
        if joined not in self._welfare:
            self._welfare[joined] = self.oracle.welfare_int(self.oracle.graph(joined))
        return self._welfare[joined]

    def prices(self, joined: int) -> tuple[Fraction, ...]:
        s = self.oracle.scale
        return tuple(Fraction(p, s) for p in self.scaled(joined))

    def welfare(self, joined: int) -> Fraction:
        return Fraction(self.welfare_scaled(joined), self.oracle.scale)

    def on_off_scaled(self, joined: int, j: int) -> tuple[int, int]:
        bit = 1 << j
        return self.scaled(joined | bit)[j], self.scaled(joined & ~bit)[j]

    def on_off(self, joined: int, j: int) -> tuple[Fraction, Fraction]:
        on, off = self.on_off_scaled(joined, j)
        return Fraction(on, self.oracle.scale), Fraction(off, self.oracle.scale)

    def revenue(self, joined: int, alpha: Fraction) -> Fraction:
        row = self.scaled(joined)
        return alpha * Fraction(sum(row[j] for j in members(joined)), self.oracle.scale)


_TABLES: dict[tuple[int, str], tuple[Market, PriceTable]] = {}


def table_for(market: Market, rule: str = "max") -> PriceTable:
    key = (id(market), rule)
    entry = _TABLES.get(key)
    if entry is not None and entry[0] is market:
        return entry[1]
    if len(_TABLES) > 256:
        _TABLES.clear()
    table = PriceTable(market, rule)
    _TABLES[key] = (market, table)
    return table


def _as_mask(P) -> int:
    return P if isinstance(P, int) else mask_of(P)


def on_off_prices(scenario: PlatformScenario, P: Iterable[int], j: int, rule: str = "max"):
    """Seller ``j``'s price if it joins (with P) and if it stays off."""
    return table_for(scenario.market, rule).on_off(_as_mask(P), j)


def deviation_gains(table: PriceTable, joined: int, alpha: Fraction) -> tuple[Fraction, ...]:
    """Utility change each seller would get by flipping its own choice."""
    s = table.oracle.scale
    gains = []
    for j in range(table.m):
        on, off = table.on_off_scaled(joined, j)
        stay_on = (1 - alpha) * on
        if joined >> j & 1:
            gains.append(Fraction(off, s) - stay_on / s)
        else:
            gains.append(stay_on / s - Fraction(off, s))
    return tuple(gains)


def is_pure_equilibrium(table: PriceTable, joined: int, alpha: Fraction) -> bool:
    num, den = alpha.numerator, alpha.denominator
    keep = den - num
    for j in range(table.m):
        on, off = table.on_off_scaled(joined, j)
        if joined >> j & 1:
            if keep * on < den * off:
                return False
        elif den * off < keep * on:
            return False
    return True


def pure_report(table: PriceTable, joined: int, alpha: Fraction) -> EquilibriumReport:
    prices = table.prices(joined)
    utils = tuple((1 - alpha) * p if joined >> j & 1 else p for j, p in enumerate(prices))
    gains = deviation_gains(table, joined, alpha)
    return EquilibriumReport(
        profile=PureProfile(members(joined)),
        alpha=Fraction(alpha),
        prices=prices,
        welfare=table.welfare(joined),
        revenue=table.revenue(joined, alpha),
        seller_utilities=utils,
        is_equilibrium=all(g <= 0 for g in gains),
        certificate=gains,
    )


def check_pure_equilibrium(scenario: PlatformScenario, P: Iterable[int],
                           rule: str = "max") -> EquilibriumReport:
    """Report on the joined set ``P``; ties count as equilibrium (weak inequalities)."""
    table = table_for(scenario.market, rule)
    return pure_report(table, _as_mask(P), scenario.alpha)


def _check_cap(m: int, cap: int):
    if m > cap:
        raise TooLarge(f"{m} sellers exceeds the enumeration cap of {cap}")


def enumerate_pure_equilibria(scenario: PlatformScenario, cap: int = ENUMERATION_CAP,
                              rule: str = "max") -> list[EquilibriumReport]:
    """Every pure equilibrium, sorted by welfare then by joined set."""
    market = scenario.market
    _check_cap(market.m, cap)
    table = table_for(market, rule)
    found = [
        pure_report(table, P, scenario.alpha)
        for P in range(1 << market.m)
        if is_pure_equilibrium(table, P, scenario.alpha)
    ]
    found.sort(key=lambda r: (r.welfare, sorted(r.profile.joined)))
    return found


def equilibrium_interval(table: PriceTable, joined: int):
    """Closed interval of fees at which ``joined`` is a pure equilibrium, or None.

    Members need fee <= 1 - p_off/p_on, outsiders need fee >= the same
    threshold; sellers with p_on = 0 constrain nothing unless p_off > 0.
    """
    lo, hi = Fraction(0), Fraction(1)
    for j in range(table.m):
        on, off = table.on_off_scaled(joined, j)
        if joined >> j & 1:
            if on == 0:
                if off > 0:
                    return None
                continue
            hi = min(hi, 1 - Fraction(off, on))
        elif on > 0:
            lo = max(lo, 1 - Fraction(off, on))
    if lo > hi:
        return None
    return lo, hi


def _require_homogeneous(market: Market):
    if not market.homogeneous:
        raise NotHomogeneous("this procedure needs a homogeneous-goods market")


@dataclass(frozen=True)
class TraceStep:
    seller: int
    gain: Fraction
    off_price: Fraction


def algorithm1_find_pure(scenario: PlatformScenario):
    """Grow the joined set greedily by on-platform gain.

    Each round adds the outsider with the largest gain
    ``(1 - alpha) * p_on - p_off``, ties to the lowest off-platform price and
    then the lowest index, while that gain is non-negative.
    Returns ``(joined_set, trace)``.
    """
    market = scenario.market
    _require_homogeneous(market)
    table = table_for(market)
    alpha = scenario.alpha
    joined = 0
    trace: list[TraceStep] = []
    while joined != table.oracle.all_sellers:
        best = None
        for j in range(market.m):
            if joined >> j & 1:
                continue
            on, off = table.on_off(joined, j)
            gain = (1 - alpha) * on - off
            key = (-gain, off, j)
            if best is None or key < best[0]:
                best = (key, j, gain, off)
        _, j, gain, off = best
        if gain < 0:
            break
        joined |= 1 << j
        trace.append(TraceStep(j, gain, off))
    return members(joined), trace


@dataclass(frozen=True)
class SweepEntry:
    alpha: Fraction
    joined: frozenset[int]
    revenue: Fraction


def alpha_sweep(market: Market) -> list[SweepEntry]:
    """Lower the fee from 1 towards 0, adding one seller per breakpoint.

    Starts from the sellers that do not trade off-platform, all of which may
    join at fee 1. Then, repeatedly, the outsider whose break-even fee
    ``1 - p_off/p_on`` is largest joins at exactly that fee (ties: lowest
    off-platform price, then lowest index). An outsider with ``p_on = 0`` is
    indifferent at every fee and joins at the current one.
    """
    _require_homogeneous(market)
    table = table_for(market)
    oracle = table.oracle
    idle = set(range(market.m)) - oracle.matching(oracle.base).transacting_sellers
    entries: list[SweepEntry] = []
    joined = 0
    alpha = Fraction(1)
    for j in sorted(idle):
        joined |= 1 << j
        entries.append(SweepEntry(alpha, members(joined), table.revenue(joined, alpha)))
    while len(entries) < market.m:
        best = None
        for j in range(market.m):
            if joined >> j & 1:
                continue
            on, off = table.on_off(joined, j)
            threshold = alpha if on == 0 else min(alpha, 1 - off / on)
            key = (-threshold, off, j)
            if best is None or key < best[0]:
                best = (key, j, threshold)
        _, j, alpha = best
        joined |= 1 << j
        entries.append(SweepEntry(alpha, members(joined), table.revenue(joined, alpha)))
    return entries


class StepLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class Converged:
    joined: frozenset[int]


@dataclass(frozen=True)
class Cycle:
    states: tuple[frozenset[int], ...]


def best_response_dynamics(scenario: PlatformScenario, start: Iterable[int] = (),
                           max_steps: int = 1000, rule: str = "max"):
    """Round-robin better-response dynamics.

    Sellers get turns in index order, cycling; on its turn a seller flips
    only if flipping strictly raises its utility (ties keep it put). The
    scan for the next mover starts just after the previous mover. Returns
    :class:`Converged` after a full round without a move, or :class:`Cycle`
    listing the joined sets of the first repeated state onwards.
    """
    table = table_for(scenario.market, rule)
    m = scenario.market.m
    alpha = scenario.alpha
    joined = _as_mask(start)
    turn = 0
    seen: dict[tuple[int, int], int] = {}
    history: list[int] = []
    for _ in range(max_steps + 1):
        state = (joined, turn)
        if state in seen:
            return Cycle(tuple(members(P) for P in history[seen[state]:]))
        seen[state] = len(history)
        history.append(joined)
        if m == 0:
            return Converged(members(joined))
        gains = deviation_gains(table, joined, alpha)
        mover = next(((turn + k) % m for k in range(m) if gains[(turn + k) % m] > 0), None)
        if mover is None:
            return Converged(members(joined))
        joined ^= 1 << mover
        turn = (mover + 1) % m
    raise StepLimit(f"no convergence or cycle within {max_steps} steps")
