"""Seeded property battery used by ``platform-market verify-suite``.

Each check runs over a batch of random markets and returns human-readable
failure strings; an empty list means the property held everywhere.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .extensions import (
    PartitionBuyer,
    apply_cost_transform,
    brute_force_partition_welfare,
    build_multi_platform,
    expand_partition_buyers,
    source_to_target,
    source_welfare,
    target_to_source,
    verify_cost_poa,
    BoundVacuous,
)
from .fixtures import generate_random
from .game import (
    algorithm1_find_pure,
    alpha_sweep,
    enumerate_pure_equilibria,
    is_pure_equilibrium,
    table_for,
)
from .matching import oracle_for
from .model import Market, PlatformScenario, mask_of, members
from .optimizer import verify_welfare_bounds
from .prices import check_competitive_equilibrium, max_prices, min_prices, path_price

ALPHAS = (Fraction(1, 10), Fraction(3, 10), Fraction(1, 2))


def brute_welfare(market: Market, graph, sellers=None) -> Fraction:
    """Exhaustive best matching; fine for up to six sellers."""
    sellers = list(range(market.m)) if sellers is None else list(sellers)
    best = Fraction(0)
    options = [[None] + [i for i in range(market.n) if graph[j] >> i & 1] for j in sellers]
    for pick in itertools.product(*options):
        used = [i for i in pick if i is not None]
        if len(used) != len(set(used)):
            continue
        best = max(best, sum((market.values[i][j] for j, i in zip(sellers, pick) if i is not None),
                             Fraction(0)))
    return best


def _random(seed, homogeneous=False, max_n=5, max_m=5, **kw):
    import random
    rng = random.Random(seed)
    n = rng.randint(1, max_n)
    m = rng.randint(1, max_m)
    density = rng.choice((0.0, 0.25, 0.5, 0.75, 1.0))
    return generate_random(seed, n, m, homogeneous=homogeneous, edge_density=density, **kw)


def check_matching(seed: int) -> list[str]:
    market = _random(seed)
    o = oracle_for(market)
    out = []
    for joined in range(1 << market.m):
        g = o.graph(joined)
        if o.welfare(g) != brute_welfare(market, g):
            out.append(f"seed {seed}: welfare mismatch with joined set {sorted(members(joined))}")
    return out


def check_prices(seed: int) -> list[str]:
    market = _random(seed)
    o = oracle_for(market)
    alloc = o.matching(o.base).allocation
    hi, lo = max_prices(market), min_prices(market)
    out = []
    if any(a > b for a, b in zip(lo, hi)):
        out.append(f"seed {seed}: min price above max price")
    for name, p in (("max", hi), ("min", lo)):
        ok, bad = check_competitive_equilibrium(market, None, p, alloc)
        if not ok:
            out.append(f"seed {seed}: {name} prices fail: {bad[0]}")
    return out


def check_paths(seed: int) -> list[str]:
    market = _random(seed, homogeneous=True, max_n=6, max_m=6)
    o = oracle_for(market)
    alloc = o.matching(o.base).allocation
    prices = max_prices(market)
    return [f"seed {seed}: path price differs for seller {j}"
            for i, j in alloc.pairs if path_price(market, None, alloc, i) != prices[j]]


def check_algorithm1(seed: int) -> list[str]:
    market = _random(seed, homogeneous=True, max_n=6, max_m=6)
    table = table_for(market)
    out = []
    for alpha in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
        P, _ = algorithm1_find_pure(PlatformScenario(market, alpha))
        mask = mask_of(P)
        if not is_pure_equilibrium(table, mask, alpha):
            out.append(f"seed {seed}: algorithm output {sorted(P)} is not an equilibrium at {alpha}")
        if len({table.prices(mask)[j] for j in P}) > 1:
            out.append(f"seed {seed}: unequal on-platform prices at {alpha}")
    sizes = set()
    for entry in alpha_sweep(market):
        sizes.add(len(entry.joined))
        if not is_pure_equilibrium(table, mask_of(entry.joined), entry.alpha):
            out.append(f"seed {seed}: sweep entry {sorted(entry.joined)} fails at {entry.alpha}")
    if sizes != set(range(1, market.m + 1)):
        out.append(f"seed {seed}: sweep sizes {sorted(sizes)}")
    return out


def check_welfare_bound(seed: int) -> list[str]:
    market = _random(seed)
    out = []
    for alpha in ALPHAS:
        eqs = enumerate_pure_equilibria(PlatformScenario(market, alpha))
        report = verify_welfare_bounds(market, alpha, eqs)
        out += [f"seed {seed}: bound violated at {alpha} by {sorted(c.profile.joined)}"
                for c in report.violations]
    return out


def check_costs(seed: int) -> list[str]:
    market = _random(seed, cost_range=(0, 4))
    t = apply_cost_transform(market)
    out = []
    for joined in range(1 << market.m):
        if source_welfare(t, members(joined)) != oracle_for(t.target).welfare(
                oracle_for(t.target).graph(joined)):
            out.append(f"seed {seed}: welfare differs with joined {sorted(members(joined))}")
    od = oracle_for(t.dummy)
    ok, _ = check_competitive_equilibrium(t.target, None,
                                          *source_to_target(t, max_prices(t.dummy),
                                                            od.matching(od.base).allocation))
    if not ok:
        out.append(f"seed {seed}: mapped source equilibrium fails in target")
    ot = oracle_for(t.target)
    ok, _ = check_competitive_equilibrium(t.dummy, None,
                                          *target_to_source(t, max_prices(t.target),
                                                            ot.matching(ot.base).allocation))
    if not ok:
        out.append(f"seed {seed}: mapped target equilibrium fails in source")
    for alpha in (Fraction(1, 10), Fraction(3, 10)):
        try:
            if not verify_cost_poa(market, alpha).ok:
                out.append(f"seed {seed}: cost bound violated at {alpha}")
        except BoundVacuous:
            pass
    return out


def check_partitions(seed: int) -> list[str]:
    import random
    rng = random.Random(seed)
    market = _random(seed, max_n=3, max_m=4)
    parts = {}
    for i in range(market.n):
        sellers = list(range(market.m))
        rng.shuffle(sellers)
        cut = rng.randint(0, market.m)
        groups = [g for g in (sellers[:cut], sellers[cut:]) if g]
        parts[i] = PartitionBuyer(tuple((frozenset(g), rng.randint(0, 2)) for g in groups))
    exp = expand_partition_buyers(market, parts)
    if exp.market.n > 10:
        return []
    o = oracle_for(exp.market)
    got = o.welfare(o.base)
    want = brute_force_partition_welfare(market, parts)
    return [] if got == want else [f"seed {seed}: expanded welfare {got} != {want}"]


def check_multi_platform(seed: int) -> list[str]:
    market = _random(seed, max_n=4, max_m=4)
    alpha = Fraction(1, 2)
    base = {frozenset(r.profile.joined)
            for r in enumerate_pure_equilibria(PlatformScenario(market, alpha))}
    game = build_multi_platform(
        PlatformScenario(market, alpha, ((frozenset(range(market.n)), alpha),)), "always")
    multi = {frozenset(j for j, s in enumerate(r.strategies) if s) for r in game.equilibria()}
    return [] if base == multi else [f"seed {seed}: single-platform reduction differs"]


CHECKS: dict[str, Callable[[int], list[str]]] = {
    "matching": check_matching,
    "prices": check_prices,
    "paths": check_paths,
    "algorithm1": check_algorithm1,
    "welfare_bound": check_welfare_bound,
    "costs": check_costs,
    "partitions": check_partitions,
    "multi_platform": check_multi_platform,
}


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: list[str]

    def to_json(self) -> dict:
        return {"name": self.name, "cases": self.cases, "failures": self.failures[:20],
                "failure_count": len(self.failures), "ok": not self.failures}


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PLATFORM_MARKET_THREADS", "1")))
    except ValueError:
        return 1


def run_suite(cases: int = 20, seed: int = 0, only=None) -> list[SuiteResult]:
    names = only or list(CHECKS)
    results = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for name in names:
            check = CHECKS[name]
            failures = []
            for found in pool.map(check, range(seed, seed + cases)):
                failures += found
            results.append(SuiteResult(name, cases, failures))
    return results
