"""Independent brute-force references for the test suite.

Nothing here imports the package's matching or price code; every value is
rebuilt from the raw valuation matrix and link set by exhaustive search.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def links_of(market, joined=()):
    """Link set of the market after ``joined`` sellers connect to everyone."""
    links = set(market.edges)
    for j in joined:
        links.update((i, j) for i in range(market.n))
    return frozenset(links)


def brute_welfare(values, links, sellers, buyers=None, copies=()):
    """Best total value over matchings; ``copies`` lists sellers present twice."""
    n = len(values)
    buyers = set(range(n)) if buyers is None else set(buyers)
    slots = list(sellers) + list(copies)
    options = [[None] + [i for i in buyers if (i, j) in links] for j in slots]
    best = Fraction(0)
    for pick in itertools.product(*options):
        used = [i for i in pick if i is not None]
        if len(used) != len(set(used)):
            continue
        total = sum((values[i][j] for j, i in zip(slots, pick) if i is not None), Fraction(0))
        best = max(best, total)
    return best


def brute_max_prices(market, joined=()):
    links = links_of(market, joined)
    every = range(market.m)
    w = brute_welfare(market.values, links, every)
    return [w - brute_welfare(market.values, links, [k for k in every if k != j]) for j in every]


def brute_min_prices(market, joined=()):
    links = links_of(market, joined)
    every = range(market.m)
    w = brute_welfare(market.values, links, every)
    return [brute_welfare(market.values, links, every, copies=[j]) - w for j in every]


def brute_pure_equilibria(market, alpha, rule="max"):
    """All joined sets satisfying the weak join/stay inequalities, via brute prices."""
    price = brute_max_prices if rule == "max" else brute_min_prices
    cache = {}

    def p(P):
        key = frozenset(P)
        if key not in cache:
            cache[key] = price(market, key)
        return cache[key]

    out = []
    for r in range(market.m + 1):
        for P in itertools.combinations(range(market.m), r):
            P = frozenset(P)
            good = True
            for j in range(market.m):
                on = p(P | {j})[j]
                off = p(P - {j})[j]
                if j in P and (1 - alpha) * on < off:
                    good = False
                if j not in P and off < (1 - alpha) * on:
                    good = False
            if good:
                out.append(P)
    return out


def all_optimal_matchings(market, links):
    """Every welfare-maximizing matching as a sorted tuple of (buyer, seller) pairs."""
    sellers = range(market.m)
    options = [[None] + [i for i in range(market.n) if (i, j) in links] for j in sellers]
    scored = []
    for pick in itertools.product(*options):
        used = [i for i in pick if i is not None]
        if len(used) != len(set(used)):
            continue
        pairs = tuple(sorted((i, j) for j, i in enumerate(pick) if i is not None))
        scored.append((sum((market.values[i][j] for i, j in pairs), Fraction(0)), pairs))
    best = max(s for s, _ in scored)
    return [pairs for s, pairs in scored if s == best]


def competitive_prices_between(market, links, alloc_pairs, lower, upper, target):
    """A competitive price vector near ``target`` inside [lower, upper].

    Competitive prices supporting a fixed optimal allocation are the
    solutions of difference constraints p_j - p_k <= v_ij - v_ik (buyer i
    holds j and is linked to k), p_j <= v_ij, p_k >= v_ik - u_i bounds and
    p = 0 on unsold goods. Bellman-Ford from the clipped target gives the
    largest solution below it.
    """
    m = market.m
    holder = {j: i for i, j in alloc_pairs}
    cap = [min(max(t, lo), hi) for t, lo, hi in zip(target, lower, upper)]
    for j in range(m):
        if j not in holder:
            cap[j] = Fraction(0)
    p = list(cap)
    for _ in range(m + 1):
        changed = False
        for j, i in holder.items():
            p_new = min(p[j], market.values[i][j])
            for k in range(m):
                if k != j and (i, k) in links:
                    p_new = min(p_new, market.values[i][j] - market.values[i][k] + p[k])
            if p_new < p[j]:
                p[j] = p_new
                changed = True
        if not changed:
            break
    return p


def harmonic(k):
    return sum((Fraction(1, i) for i in range(1, k + 1)), Fraction(0))


def partition_welfare(values, links, groups_by_buyer):
    """Additive-over-partition optimum by assigning every seller to a buyer or nobody."""
    n, m = len(values), len(values[0]) if values else 0
    options = [[None] + [i for i in range(n) if (i, j) in links] for j in range(m)]
    best = Fraction(0)
    for pick in itertools.product(*options):
        total = Fraction(0)
        for i in range(n):
            mine = {j for j, b in enumerate(pick) if b == i}
            for sellers, cap in groups_by_buyer[i]:
                vals = sorted((values[i][j] for j in mine & set(sellers)), reverse=True)
                total += sum(vals[:cap], Fraction(0))
        best = max(best, total)
    return best
