"""Revenue-optimal fees, price of anarchy and the regulated welfare bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .game import alpha_sweep, equilibrium_interval, pure_report, table_for
from .matching import optimal_welfare
from .mixed import DEFAULT_TOL, check_mixed_equilibrium, solve_mixed
from .model import (
    ENUMERATION_CAP,
    EquilibriumReport,
    Market,
    MixedProfile,
    PlatformScenario,
    PureProfile,
    TooLarge,
    format_rational,
    mask_of,
    members,
)

EXACT_THRESHOLD_LIMIT = 8


def revenue_of(scenario: PlatformScenario, profile, rule: str = "max") -> Fraction:
    """Platform revenue: the fee times the prices of joined sellers (expected, if mixed)."""
    if isinstance(profile, MixedProfile):
        return check_mixed_equilibrium(scenario, profile.x, rule=rule).revenue
    joined = profile.joined if isinstance(profile, PureProfile) else profile
    return table_for(scenario.market, rule).revenue(mask_of(joined), scenario.alpha)


@dataclass
class OptimizationResult:
    alpha_star: Fraction
    best_profile: PureProfile | MixedProfile | None
    revenue: Fraction
    welfare_at_best: Fraction | None
    candidate_grid: list[Fraction]
    regulated_cap: Fraction | None = None
    mode: str = "optimistic"
    heuristic: bool = False
    optimal_equilibria: list[EquilibriumReport] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "alpha_star": format_rational(self.alpha_star),
            "best_profile": self.best_profile.to_json() if self.best_profile else None,
            "revenue": format_rational(self.revenue),
            "welfare_at_best": (format_rational(self.welfare_at_best)
                                if self.welfare_at_best is not None else None),
            "candidate_count": len(self.candidate_grid),
            "regulated_cap": (format_rational(self.regulated_cap)
                              if self.regulated_cap is not None else None),
            "mode": self.mode,
            "heuristic": self.heuristic,
            "optimal_equilibria": [r.to_json() for r in self.optimal_equilibria],
        }


def candidate_alphas(market: Market, cap: Fraction | None = None,
                     grid_resolution: int = 20, intervals=None) -> list[Fraction]:
    """Finite set of fees at which the pure-equilibrium set can change."""
    top = Fraction(1) if cap is None else Fraction(cap)
    found = {Fraction(0), top}
    if grid_resolution > 0:
        found.update(top * Fraction(k, grid_resolution) for k in range(grid_resolution + 1))
    if market.homogeneous and market.m:
        found.update(e.alpha for e in alpha_sweep(market) if 0 <= e.alpha <= top)
    if intervals is not None:
        for span in intervals.values():
            if span is not None:
                found.update(a for a in span if 0 <= a <= top)
    return sorted(found)


def _all_intervals(market: Market, rule: str):
    table = table_for(market, rule)
    return {P: equilibrium_interval(table, P) for P in range(1 << market.m)}


def optimize_alpha(market: Market, cap=None, grid_resolution: int = 20,
                   mode: str = "optimistic", include_mixed: bool = False,
                   rule: str = "max", enum_cap: int = ENUMERATION_CAP) -> OptimizationResult:
    """Search the fee that maximizes platform revenue at equilibrium.

    ``optimistic`` lets the platform pick the best equilibrium at each fee;
    ``pessimistic`` assumes the worst one. Pure equilibria are handled
    exactly through the closed fee interval of every joined set; every
    interval endpoint is a candidate when there are at most eight sellers,
    which makes the pure optimum exact. Ties prefer the higher fee, then the
    smaller joined set.
    """
    if mode not in ("optimistic", "pessimistic"):
        raise ValueError(f"unknown mode {mode!r}")
    if market.m > enum_cap:
        raise TooLarge(f"{market.m} sellers exceeds the enumeration cap of {enum_cap}")
    cap = None if cap is None else Fraction(cap)
    table = table_for(market, rule)
    intervals = _all_intervals(market, rule)
    exact = market.m <= EXACT_THRESHOLD_LIMIT
    grid = candidate_alphas(market, cap, grid_resolution, intervals if exact else None)
    totals = {P: sum(table.scaled(P)[j] for j in members(P)) for P in intervals}
    scale = table.oracle.scale
    best = None
    for alpha in grid:
        eq = [P for P, span in intervals.items() if span and span[0] <= alpha <= span[1]]
        options = [(alpha * Fraction(totals[P], scale), PureProfile(members(P))) for P in eq]
        if include_mixed:
            scenario = PlatformScenario(market, alpha)
            for prof, res in solve_mixed(scenario, rule=rule):
                if res <= DEFAULT_TOL and any(0 < p < 1 for p in prof.x):
                    options.append((revenue_of(scenario, prof, rule), prof))
        if not options:
            continue
        pick = max if mode == "optimistic" else min
        revenue = pick(r for r, _ in options)
        if best is None or (revenue, alpha) > (best[0], best[1]):
            best = (revenue, alpha, [p for r, p in options if r == revenue])
    if best is None:
        return OptimizationResult(Fraction(0), None, Fraction(0), None, grid, cap, mode,
                                  include_mixed or not exact)
    revenue, alpha, profiles = best
    scenario = PlatformScenario(market, alpha)
    reports = []
    for prof in profiles:
        if isinstance(prof, PureProfile):
            reports.append(pure_report(table, mask_of(prof.joined), alpha))
        else:
            reports.append(check_mixed_equilibrium(scenario, prof.x, rule=rule))
    reports.sort(key=lambda r: (isinstance(r.profile, MixedProfile), _profile_key(r.profile)))
    top = reports[0]
    return OptimizationResult(alpha, top.profile, revenue, top.welfare, grid, cap, mode,
                              include_mixed or not exact, reports)


def _profile_key(profile):
    if isinstance(profile, PureProfile):
        return (len(profile.joined), sorted(profile.joined))
    return (0, list(profile.x))


class EmptyEquilibriumList(ValueError):
    pass


@dataclass(frozen=True)
class PoAResult:
    ideal: Fraction
    worst_welfare: Fraction
    ratio: Fraction | float

    def to_json(self) -> dict:
        ratio = "inf" if self.ratio == math.inf else format_rational(self.ratio)
        return {"ideal": format_rational(self.ideal),
                "worst_welfare": format_rational(self.worst_welfare), "ratio": ratio}


def price_of_anarchy(market: Market, alpha, equilibria: Sequence[EquilibriumReport]) -> PoAResult:
    """Optimal welfare on the complete graph over the worst supplied equilibrium welfare."""
    if not equilibria:
        raise EmptyEquilibriumList("need at least one equilibrium")
    ideal = optimal_welfare(market)
    worst = min(r.welfare for r in equilibria)
    ratio = math.inf if worst == 0 else ideal / worst
    return PoAResult(ideal, worst, ratio)


class AlphaOne(ValueError):
    pass


@dataclass(frozen=True)
class BoundCheck:
    profile: object
    welfare: Fraction
    welfare_bound: Fraction
    surplus: Fraction
    surplus_bound: Fraction

    @property
    def welfare_margin(self) -> Fraction:
        return self.welfare - self.welfare_bound

    @property
    def surplus_margin(self) -> Fraction:
        return self.surplus - self.surplus_bound

    @property
    def ok(self) -> bool:
        return self.welfare_margin >= 0 and self.surplus_margin >= 0

    def to_json(self) -> dict:
        return {
            "profile": self.profile.to_json(),
            "welfare": format_rational(self.welfare),
            "welfare_bound": format_rational(self.welfare_bound),
            "welfare_margin": format_rational(self.welfare_margin),
            "surplus": format_rational(self.surplus),
            "surplus_bound": format_rational(self.surplus_bound),
            "surplus_margin": format_rational(self.surplus_margin),
            "ok": self.ok,
        }


@dataclass(frozen=True)
class BoundReport:
    alpha: Fraction
    optimum: Fraction
    checks: tuple[BoundCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if not c.ok]

    def to_json(self) -> dict:
        return {"alpha": format_rational(self.alpha), "optimum": format_rational(self.optimum),
                "ok": self.ok, "checks": [c.to_json() for c in self.checks]}


def welfare_fraction(alpha: Fraction) -> Fraction:
    return (1 - alpha) / (2 - alpha)


def verify_welfare_bounds(market: Market, alpha,
                          equilibria: Sequence[EquilibriumReport]) -> BoundReport:
    """Check welfare >= (1-a)/(2-a) W* and buyer+seller surplus >= (1-a)^2/(2-a) W*."""
    alpha = Fraction(alpha)
    if alpha >= 1:
        raise AlphaOne("the welfare bound is vacuous at fee 1")
    optimum = optimal_welfare(market)
    wb = welfare_fraction(alpha) * optimum
    sb = (1 - alpha) * wb
    checks = tuple(BoundCheck(r.profile, r.welfare, wb, r.surplus, sb) for r in equilibria)
    return BoundReport(alpha, optimum, checks)
