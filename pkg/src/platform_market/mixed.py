"""Mixed join strategies: an exact verifier and a heuristic solver."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize

from .game import PriceTable, table_for
from .model import (
    ENUMERATION_CAP,
    EquilibriumReport,
    MixedProfile,
    PlatformScenario,
    TooLarge,
    members,
)

DEFAULT_TOL = Fraction(1, 10**6)


def profile_weights(x: Sequence[Fraction]) -> list[Fraction]:
    """Probability of every joined-set bitmask under independent joins."""
    weights = [Fraction(1)]
    for p in x:
        q = 1 - p
        weights = [w * q for w in weights] + [w * p for w in weights]
    return weights


def _expectations(table: PriceTable, x: Sequence[Fraction]):
    """Per seller, expected price if it joins and if it stays off.

    Seller j's price under either choice depends only on the others, so the
    average can run over the full distribution regardless of ``x[j]``.
    """
    m = table.m
    s = table.oracle.scale
    weights = profile_weights(x)
    e_join = [Fraction(0)] * m
    e_stay = [Fraction(0)] * m
    for mask, w in enumerate(weights):
        if not w:
            continue
        for j in range(m):
            on, off = table.on_off_scaled(mask, j)
            e_join[j] += w * on
            e_stay[j] += w * off
    return weights, [e / s for e in e_join], [e / s for e in e_stay]


def check_mixed_equilibrium(scenario: PlatformScenario, x: Sequence, tol=DEFAULT_TOL,
                            rule: str = "max", cap: int = ENUMERATION_CAP) -> EquilibriumReport:
    """Exact check of a join-probability vector.

    A seller passes when every action it plays with positive probability
    earns within ``tol`` of its better action. The certificate holds that
    shortfall (the regret) per seller.
    """
    market = scenario.market
    if market.m > cap:
        raise TooLarge(f"{market.m} sellers exceeds the enumeration cap of {cap}")
    profile = MixedProfile(tuple(Fraction(p) for p in x))
    if len(profile.x) != market.m:
        raise ValueError(f"expected {market.m} probabilities, got {len(profile.x)}")
    xs = profile.x
    alpha = scenario.alpha
    tol = Fraction(tol)
    table = table_for(market, rule)
    weights, e_join, e_stay = _expectations(table, xs)
    regrets, utils = [], []
    for j in range(market.m):
        join_u = (1 - alpha) * e_join[j]
        stay_u = e_stay[j]
        best = max(join_u, stay_u)
        played = []
        if xs[j] > 0:
            played.append(join_u)
        if xs[j] < 1:
            played.append(stay_u)
        regrets.append(best - min(played))
        utils.append(xs[j] * join_u + (1 - xs[j]) * stay_u)
    s = table.oracle.scale
    exp_prices = [Fraction(0)] * market.m
    welfare = Fraction(0)
    revenue = Fraction(0)
    for mask, w in enumerate(weights):
        if not w:
            continue
        row = table.scaled(mask)
        for j in range(market.m):
            exp_prices[j] += w * row[j]
        welfare += w * table.welfare_scaled(mask)
        revenue += w * sum(row[j] for j in members(mask))
    return EquilibriumReport(
        profile=profile,
        alpha=alpha,
        prices=tuple(p / s for p in exp_prices),
        welfare=welfare / s,
        revenue=alpha * revenue / s,
        seller_utilities=tuple(utils),
        is_equilibrium=all(r <= tol for r in regrets),
        certificate=tuple(regrets),
    )


def residual(report: EquilibriumReport) -> Fraction:
    return max(report.certificate, default=Fraction(0))


class _FloatGame:
    """Float copy of the price table for fast expected-gain evaluation."""

    def __init__(self, table: PriceTable, alpha: Fraction):
        m = table.m
        s = table.oracle.scale
        size = 1 << m
        rows = np.array([table.scaled(mask) for mask in range(size)], dtype=float) / s
        self.bits = ((np.arange(size)[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)
        # ON[mask, j]: price of j if it joins with the others of mask; OFF likewise
        self.on = np.empty((size, m))
        self.off = np.empty((size, m))
        for j in range(m):
            with_j = np.arange(size) | (1 << j)
            without = np.arange(size) & ~(1 << j)
            self.on[:, j] = rows[with_j, j]
            self.off[:, j] = rows[without, j]
        self.keep = float(1 - alpha)
        self.settle_gap = 1e-6 * (1.0 + float(np.abs(self.on).max(initial=0.0)))

    def gains(self, x: np.ndarray) -> np.ndarray:
        """Join-minus-stay payoff per seller; ``x`` may be one profile or a stack of them."""
        x = np.asarray(x)
        prob = np.where(self.bits, x[..., None, :], 1 - x[..., None, :]).prod(axis=-1)
        return self.keep * (prob @ self.on) - prob @ self.off

    def regret(self, x: np.ndarray) -> np.ndarray:
        d = self.gains(x)
        inner = (x > 0) & (x < 1)
        return np.where(inner, np.abs(d), np.where(x >= 1, np.maximum(-d, 0), np.maximum(d, 0))
                        ).max(axis=-1)


def _polish(game: _FloatGame, x: np.ndarray, snap: float = 1e-7,
            settle: bool = True) -> np.ndarray:
    """Snap near-pure coordinates, then solve for indifference on the rest.

    With ``settle`` a coordinate whose gain clearly has one sign also goes
    to that pure action: damped steps only approach 0 or 1 like 1/t.
    """
    x = x.copy()
    x[x < snap] = 0.0
    x[x > 1 - snap] = 1.0
    if settle:
        d = game.gains(x)
        clear = np.abs(d) > game.settle_gap
        x[clear & (d > 0)] = 1.0
        x[clear & (d < 0)] = 0.0
    interior = np.flatnonzero((x > 0) & (x < 1))
    if interior.size == 0:
        return x

    def f(z):
        y = x.copy()
        y[interior] = z
        return game.gains(y)[interior]

    sol = optimize.root(f, x[interior], method="hybr")
    if sol.success and np.all(sol.x >= -1e-12) and np.all(sol.x <= 1 + 1e-12):
        x[interior] = np.clip(sol.x, 0.0, 1.0)
    return x


def _damped_response(game: _FloatGame, x: np.ndarray, max_iters: int,
                     tol: float = 0.0) -> np.ndarray:
    """Move every row of ``x`` toward its better response with step 1/(t+2).

    After 25, 50, 100, ... rounds the rows are polished; once all polished
    rows have float regret at most ``tol``, those are returned early.
    """
    checkpoint = 25
    for t in range(max_iters):
        d = game.gains(x)
        target = np.where(d > 0, 1.0, np.where(d < 0, 0.0, x))
        step = target - x
        if not np.any(np.abs(step) > 1e-12):
            break
        x = x + step / (t + 2)
        if tol > 0 and t + 1 == checkpoint:
            checkpoint *= 2
            polished = np.array([_polish(game, row) for row in x])
            if np.all(game.regret(polished) <= tol):
                return polished
    return x


def _support_candidates(game: _FloatGame, m: int):
    """Solve for indifference on every choice of interior support (small m only)."""
    for labels in itertools.product((0, 1, 2), repeat=m):
        interior = [j for j, lab in enumerate(labels) if lab == 2]
        if not interior:
            continue
        x = np.array([0.5 if lab == 2 else float(lab) for lab in labels])
        for start in (0.5, 0.25, 0.75):
            x[interior] = start
            yield _polish(game, x, snap=0.0, settle=False)


def solve_mixed(scenario: PlatformScenario, seeds: Sequence[Sequence[float]] | None = None,
                max_iters: int = 2000, tol=DEFAULT_TOL, rule: str = "max",
                cap: int = 12, rng_seed: int = 0, support_search_max: int = 5):
    """Search for mixed equilibria; returns ``[(MixedProfile, residual), ...]``.

    Runs damped better-response dynamics from each seed, then Newton-polishes
    the interior coordinates. If no candidate verifies and the market is
    small, it also tries every interior support. Every candidate is
    re-verified exactly; residuals are exact regrets. Nothing is claimed
    about finding all equilibria.
    """
    market = scenario.market
    m = market.m
    if m > cap:
        raise TooLarge(f"{m} sellers exceeds the solver cap of {cap}")
    table = table_for(market, rule)
    if m == 0:
        return [(MixedProfile(()), Fraction(0))]
    game = _FloatGame(table, scenario.alpha)
    if seeds is None:
        rng = np.random.default_rng(rng_seed)
        seeds = [np.zeros(m), np.ones(m), np.full(m, 0.5)] + [rng.random(m) for _ in range(4)]
    starts = np.clip(np.array([np.asarray(s, dtype=float) for s in seeds]), 0.0, 1.0)
    # float tolerance well inside the exact one, so early exits still verify
    ends = _damped_response(game, starts, max_iters, tol=float(tol) / 100)
    raw = [_polish(game, row) for row in ends]
    results = _verify_all(scenario, raw, tol, rule)
    if not any(r <= tol for _, r in results) and m <= support_search_max:
        results = _verify_all(scenario, raw + list(_support_candidates(game, m)), tol, rule)
    return results


def _to_fraction(p: float) -> Fraction:
    return Fraction(float(p)).limit_denominator(10**12)


def _verify_all(scenario, candidates, tol, rule):
    seen = set()
    out = []
    for x in candidates:
        key = tuple(np.round(x, 9))
        if key in seen:
            continue
        seen.add(key)
        xs = tuple(_to_fraction(p) for p in x)
        report = check_mixed_equilibrium(scenario, xs, tol, rule)
        out.append((report.profile, residual(report)))
    out.sort(key=lambda pair: (pair[1], pair[0].x))
    return out
