"""Command-line entry point: ``platform-market <command> [options]``.

Exit status is 0 on success, 1 on usage or input errors and 2 when a
verification (a bound, an equilibrium claim, a property) fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction

from . import extensions, fixtures, game, mixed, optimizer, suite
from .matching import oracle_for
from .model import (
    ENUMERATION_CAP,
    Allocation,
    MarketError,
    NotHomogeneous,
    PlatformScenario,
    TooLarge,
    format_rational,
    market_to_dict,
    parse_rational,
    validate_market,
)
from .prices import check_competitive_equilibrium, max_prices_in, min_prices_in

SCHEMA_VERSION = "1.0"

USAGE_ERRORS = (MarketError, NotHomogeneous, TooLarge, fixtures.UnknownFixture,
                fixtures.BadParams, optimizer.AlphaOne, optimizer.EmptyEquilibriumList,
                extensions.BoundVacuous, game.StepLimit, ValueError, OSError, KeyError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except MarketError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seller_list(text: str) -> frozenset[int]:
    if not text.strip():
        return frozenset()
    try:
        return frozenset(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated seller indices, got {text!r}")


def _rational_list(text: str) -> list[Fraction]:
    return [_rational(t) for t in text.split(",") if t.strip()]


# --- market loading ---------------------------------------------------------


def _load_raw(args) -> dict:
    if args.market:
        with open(args.market) as fh:
            return json.load(fh)
    return {}


def load_market(args):
    """Market from --market or --fixture; returns (market, raw json or None)."""
    if args.market and args.fixture:
        raise UsageError("give either --market or --fixture, not both")
    if args.market:
        raw = _load_raw(args)
        return validate_market(raw), raw
    if args.fixture:
        params = {"n": args.n, "eps": args.eps, "x": args.x, "height": args.height}
        if args.fixture == "fig3" and getattr(args, "alpha", None) is not None:
            params["alpha"] = args.alpha
        return fixtures.generate_fixture(args.fixture, **params).market, None
    raise UsageError("a market is required (--market FILE or --fixture NAME)")


def _scenario(args, market, platforms=()):
    alpha = args.alpha if args.alpha is not None else Fraction(1, 2)
    return PlatformScenario(market, alpha, platforms)


# --- serialization helpers ---------------------------------------------------


def _jsonable(value):
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _as_decimal(text):
    if isinstance(text, str) and text != "inf":
        try:
            return float(Fraction(text))
        except (ValueError, ZeroDivisionError):
            return None
    return None


def _decimal_view(result):
    """Display-only float mirror of every rational-string scalar at the top level."""
    out = {}
    for key, val in result.items():
        dec = _as_decimal(val)
        if dec is not None:
            out[key] = dec
    return out


# --- commands ---------------------------------------------------------------


def cmd_solve_ce(args):
    market, _ = load_market(args)
    o = oracle_for(market)
    joined = args.joined or frozenset()
    graph = o.graph(sum(1 << j for j in joined))
    prices = max_prices_in(o, graph) if args.prices == "max" else min_prices_in(o, graph)
    match = o.matching(graph)
    ok, violations = check_competitive_equilibrium(market, graph, prices, match.allocation)
    rows = [{"seller": j, "price": p, "buyer": match.allocation.seller_to_buyer.get(j, "")}
            for j, p in enumerate(prices)]
    result = {
        "price_rule": args.prices,
        "joined": sorted(joined),
        "prices": list(prices),
        "allocation": [list(p) for p in match.allocation.pairs],
        "welfare": match.welfare,
        "is_competitive_equilibrium": ok,
        "violations": [str(v) for v in violations],
    }
    return result, rows, ok


def cmd_find_pure(args):
    market, _ = load_market(args)
    scenario = _scenario(args, market)
    P, trace = game.algorithm1_find_pure(scenario)
    report = game.check_pure_equilibrium(scenario, P)
    rows = [{"step": k, "seller": t.seller, "gain": t.gain, "off_price": t.off_price}
            for k, t in enumerate(trace)]
    result = {"joined": sorted(P), "trace": rows, "report": report.to_json()}
    return result, rows, report.is_equilibrium


def cmd_sweep_alpha(args):
    market, _ = load_market(args)
    entries = game.alpha_sweep(market)
    table = game.table_for(market)
    rows, ok = [], True
    for e in entries:
        verified = game.is_pure_equilibrium(table, sum(1 << j for j in e.joined), e.alpha)
        ok &= verified
        rows.append({"alpha": e.alpha, "size": len(e.joined), "joined": sorted(e.joined),
                     "revenue": e.revenue, "verified": verified})
    return {"entries": rows}, rows, ok


def cmd_enumerate_eq(args):
    market, _ = load_market(args)
    scenario = _scenario(args, market)
    eqs = game.enumerate_pure_equilibria(scenario, cap=args.cap, rule=args.rule)
    rows = [{"joined": sorted(r.profile.joined), "welfare": r.welfare, "revenue": r.revenue}
            for r in eqs]
    result = {"alpha": scenario.alpha, "price_rule": args.rule, "count": len(eqs),
              "equilibria": [r.to_json() for r in eqs]}
    return result, rows, True


def cmd_dynamics(args):
    market, _ = load_market(args)
    scenario = _scenario(args, market)
    outcome = game.best_response_dynamics(scenario, args.start or (), args.max_steps)
    if isinstance(outcome, game.Converged):
        result = {"outcome": "converged", "joined": sorted(outcome.joined)}
        rows = [{"state": 0, "joined": sorted(outcome.joined)}]
    else:
        states = [sorted(s) for s in outcome.states]
        result = {"outcome": "cycle", "states": states}
        rows = [{"state": k, "joined": s} for k, s in enumerate(states)]
    return result, rows, True


def cmd_solve_mixed(args):
    market, _ = load_market(args)
    scenario = _scenario(args, market)
    found = mixed.solve_mixed(scenario, max_iters=args.max_iters, tol=args.tol)
    rows = [{"x": [format_rational(p) for p in prof.x], "residual": res,
             "verified": res <= args.tol} for prof, res in found]
    best = found[0] if found else None
    result = {"alpha": scenario.alpha, "tol": args.tol, "candidates": rows,
              "best": None if best is None else
              mixed.check_mixed_equilibrium(scenario, best[0].x, args.tol).to_json()}
    return result, rows, True


def cmd_optimize_revenue(args):
    market, _ = load_market(args)
    res = optimizer.optimize_alpha(market, cap=args.cap, grid_resolution=args.grid,
                                   mode=args.mode, include_mixed=args.mixed)
    result = res.to_json()
    if res.optimal_equilibria:
        poa = optimizer.price_of_anarchy(market, res.alpha_star, res.optimal_equilibria)
        result["price_of_anarchy"] = poa.to_json()
    rows = [{"alpha_star": res.alpha_star, "revenue": res.revenue,
             "welfare_at_best": res.welfare_at_best or ""}]
    return result, rows, True


def cmd_poa(args):
    market, _ = load_market(args)
    alphas = args.alphas or ([args.alpha] if args.alpha is not None else None)
    if alphas is None:
        res = optimizer.optimize_alpha(market, grid_resolution=args.grid)
        if not res.optimal_equilibria:
            raise UsageError("no equilibrium found at any candidate fee")
        poa = optimizer.price_of_anarchy(market, res.alpha_star, res.optimal_equilibria)
        result = {"selection": "revenue_optimal", "alpha": res.alpha_star,
                  "profile": res.best_profile.to_json(), **poa.to_json()}
        rows = [{"alpha": res.alpha_star, "ideal": poa.ideal, "worst_welfare": poa.worst_welfare,
                 "ratio": poa.ratio}]
        return result, rows, True
    points, rows, ok = [], [], True
    for alpha in alphas:
        eqs = game.enumerate_pure_equilibria(PlatformScenario(market, alpha), rule=args.rule)
        entry = {"alpha": alpha, "equilibria": len(eqs)}
        if eqs:
            poa = optimizer.price_of_anarchy(market, alpha, eqs)
            entry.update(poa.to_json())
            if alpha < 1 and args.rule == "max":
                bound = optimizer.verify_welfare_bounds(market, alpha, eqs)
                entry["bound_ok"] = bound.ok
                entry["bound_ratio"] = format_rational((2 - alpha) / (1 - alpha))
                ok &= bound.ok
            rows.append({"alpha": alpha, "ideal": poa.ideal, "worst_welfare": poa.worst_welfare,
                         "ratio": poa.ratio})
        points.append(entry)
    return {"selection": "worst_pure", "points": points}, rows, ok


def cmd_transform_costs(args):
    market, _ = load_market(args)
    t = extensions.apply_cost_transform(market)
    result = t.to_json()
    ok = True
    o = oracle_for(t.target)
    result["welfare_source"] = format_rational(extensions.source_welfare(t))
    result["welfare_target"] = format_rational(o.welfare(o.base))
    ok &= result["welfare_source"] == result["welfare_target"]
    if args.alpha is not None:
        report = extensions.verify_cost_poa(market, args.alpha)
        result["bound"] = report.to_json()
        ok &= report.ok
    rows = [{"seller": j, "cost": c} for j, c in enumerate(market.costs)]
    return result, rows, ok


def cmd_expand_partition(args):
    market, raw = load_market(args)
    parts = extensions.parse_partitions((raw or {}).get("partitions", []))
    exp = extensions.expand_partition_buyers(market, parts)
    o = oracle_for(exp.market)
    welfare = o.welfare(o.base)
    result = {"market": market_to_dict(exp.market),
              "origin": [list(p) for p in exp.origin], "welfare": welfare}
    ok = True
    if market.m <= 8 and (market.n + 1) ** market.m <= 200_000:
        brute = extensions.brute_force_partition_welfare(market, parts)
        result["brute_force_welfare"] = brute
        ok = brute == welfare
    rows = [{"copy": k, "buyer": i, "group": g} for k, (i, g) in enumerate(exp.origin)]
    return result, rows, ok


def _parse_platforms(text, market):
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        with open(text) as fh:
            data = json.load(fh)
    out = []
    for entry in data:
        buyers = entry.get("buyers", list(range(market.n)))
        out.append((frozenset(int(b) for b in buyers), parse_rational(entry["fee"])))
    return tuple(out)


def cmd_multi_platform(args):
    market, raw = load_market(args)
    if args.platforms:
        platforms = _parse_platforms(args.platforms, market)
    elif raw and "platforms" in raw:
        platforms = _parse_platforms(json.dumps(raw["platforms"]), market)
    else:
        raise UsageError("--platforms is required")
    scenario = _scenario(args, market, platforms)
    mp = extensions.build_multi_platform(scenario, args.fee_rule, args.cap)
    eqs = mp.equilibria()
    ok = True
    result = {"alpha_cap": scenario.alpha, "fee_rule": args.fee_rule, "count": len(eqs),
              "equilibria": [r.to_json() for r in eqs]}
    if scenario.alpha < 1:
        # best welfare reachable when every seller joins every platform
        everything = (1 << len(platforms)) - 1
        optimum = oracle_for(market).welfare(mp.graph([everything] * market.m))
        bound = optimizer.welfare_fraction(scenario.alpha) * optimum
        ok = all(r.welfare >= bound for r in eqs)
        result["welfare_bound"] = format_rational(bound)
        result["bound_ok"] = ok
    rows = [{"strategies": json.dumps([sorted(s) for s in r.strategies]), "welfare": r.welfare,
             "revenue": r.revenue} for r in eqs]
    return result, rows, ok


def cmd_generate(args):
    if args.fixture:
        fx = fixtures.generate_fixture(args.fixture, n=args.n, eps=args.eps, x=args.x,
                                       height=args.height, alpha=args.alpha)
        return fx.to_json(), [], True
    if args.seed is None:
        raise UsageError("generate needs --fixture or --seed")
    cost_range = (0, args.max_cost) if args.max_cost is not None else None
    market = fixtures.generate_random(args.seed, args.n or 4, args.m or 4,
                                      homogeneous=args.homogeneous,
                                      edge_density=args.density,
                                      value_range=(0, args.max_value), cost_range=cost_range)
    return {"seed": args.seed, "market": market_to_dict(market)}, [], True


def cmd_verify_suite(args):
    only = args.only.split(",") if args.only else None
    if only:
        unknown = set(only) - set(suite.CHECKS)
        if unknown:
            raise UsageError(f"unknown checks: {sorted(unknown)}")
    results = suite.run_suite(args.cases, args.seed, only)
    rows = [{"check": r.name, "cases": r.cases, "failures": len(r.failures)} for r in results]
    ok = all(not r.failures for r in results)
    return {"ok": ok, "checks": [r.to_json() for r in results]}, rows, ok


COMMANDS = {
    "solve-ce": cmd_solve_ce,
    "find-pure": cmd_find_pure,
    "sweep-alpha": cmd_sweep_alpha,
    "enumerate-eq": cmd_enumerate_eq,
    "dynamics": cmd_dynamics,
    "solve-mixed": cmd_solve_mixed,
    "optimize-revenue": cmd_optimize_revenue,
    "poa": cmd_poa,
    "transform-costs": cmd_transform_costs,
    "expand-partition": cmd_expand_partition,
    "multi-platform": cmd_multi_platform,
    "generate": cmd_generate,
    "verify-suite": cmd_verify_suite,
}


def _add_market_args(p, alpha=True):
    src = p.add_argument_group("market")
    src.add_argument("--market", help="market JSON file")
    src.add_argument("--fixture", choices=sorted(fixtures.FIXTURES), help="named instance")
    src.add_argument("--n", type=int, help="fixture size")
    src.add_argument("--eps", type=_rational, help="fixture tie-breaking epsilon")
    src.add_argument("--x", type=_rational, help="fig4 scale")
    src.add_argument("--height", type=_rational, help="fig5 high value H")
    if alpha:
        p.add_argument("--alpha", type=_rational, help="platform fee in [0, 1] (default 1/2)")


def _add_output_args(p):
    out = p.add_argument_group("output")
    out.add_argument("--output", "-o", help="write the JSON report here instead of stdout")
    out.add_argument("--csv", help="also write a CSV table to this path")
    out.add_argument("--decimal", action="store_true",
                     help="add float renderings of rational results (display only)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="platform-market", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve-ce", help="competitive prices and allocation")
    _add_market_args(p, alpha=False)
    p.add_argument("--prices", choices=("max", "min"), default="max")
    p.add_argument("--joined", type=_seller_list, help="sellers on the platform, e.g. 0,2")

    p = sub.add_parser("find-pure", help="greedy pure equilibrium (homogeneous goods)")
    _add_market_args(p)

    p = sub.add_parser("sweep-alpha", help="equilibria of every size by lowering the fee")
    _add_market_args(p, alpha=False)

    p = sub.add_parser("enumerate-eq", help="all pure equilibria")
    _add_market_args(p)
    p.add_argument("--rule", choices=game.PRICE_RULES, default="max")
    p.add_argument("--cap", type=int, default=ENUMERATION_CAP)

    p = sub.add_parser("dynamics", help="round-robin better-response dynamics")
    _add_market_args(p)
    p.add_argument("--start", type=_seller_list)
    p.add_argument("--max-steps", type=int, default=1000)

    p = sub.add_parser("solve-mixed", help="search for mixed equilibria")
    _add_market_args(p)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=_rational, default=mixed.DEFAULT_TOL)

    p = sub.add_parser("optimize-revenue", help="revenue-maximizing fee")
    _add_market_args(p, alpha=False)
    p.add_argument("--cap", type=_rational, help="regulatory fee cap")
    p.add_argument("--grid", type=int, default=20, help="uniform grid resolution")
    p.add_argument("--mode", choices=("optimistic", "pessimistic"), default="optimistic")
    p.add_argument("--mixed", action="store_true", help="also consider solver-found mixed candidates")

    p = sub.add_parser("poa", help="price of anarchy")
    _add_market_args(p)
    p.add_argument("--alphas", type=_rational_list, help="comma-separated fees for a PoA curve")
    p.add_argument("--rule", choices=game.PRICE_RULES, default="max")
    p.add_argument("--grid", type=int, default=20)

    p = sub.add_parser("transform-costs", help="remove production costs")
    _add_market_args(p)

    p = sub.add_parser("expand-partition", help="unit-demand expansion of partition buyers")
    _add_market_args(p, alpha=False)

    p = sub.add_parser("multi-platform", help="equilibria with several platforms")
    _add_market_args(p)
    p.add_argument("--platforms", help='JSON list like [{"buyers": [0, 1], "fee": "1/4"}] or a file')
    p.add_argument("--fee-rule", choices=extensions.FEE_RULES, default="platform_edges")
    p.add_argument("--cap", type=int, default=12)

    p = sub.add_parser("generate", help="write a fixture or random market")
    p.add_argument("--fixture", choices=sorted(fixtures.FIXTURES))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--eps", type=_rational)
    p.add_argument("--x", type=_rational)
    p.add_argument("--height", type=_rational)
    p.add_argument("--alpha", type=_rational)
    p.add_argument("--seed", type=int)
    p.add_argument("--homogeneous", action="store_true")
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--max-value", type=int, default=10)
    p.add_argument("--max-cost", type=int)

    p = sub.add_parser("verify-suite", help="run the randomized property battery")
    p.add_argument("--cases", type=int, default=20, help="random markets per check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", help=f"comma-separated subset of: {', '.join(suite.CHECKS)}")

    for action in sub.choices.values():
        _add_output_args(action)
    return parser


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        fields = list(rows[0])
        extra = [f"{k}_decimal" for k in fields if isinstance(rows[0][k], Fraction)]
        writer = csv.DictWriter(fh, fieldnames=fields + extra)
        writer.writeheader()
        for row in rows:
            out = {k: _jsonable(v) for k, v in row.items()}
            for k in fields:
                if isinstance(row[k], Fraction):
                    out[f"{k}_decimal"] = float(row[k])
                elif isinstance(row[k], list):
                    out[k] = json.dumps(out[k])
            writer.writerow(out)


def _params(args) -> dict:
    skip = {"command", "output", "csv", "decimal"}
    return {k: _jsonable(v) for k, v in vars(args).items() if k not in skip and v is not None}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result, rows, ok = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"platform-market: error: {exc}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(f"platform-market: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    result = _jsonable(result)
    envelope = {"schema_version": SCHEMA_VERSION, "command": args.command,
                "params": _params(args), "ok": bool(ok), "result": result}
    if args.decimal:
        envelope["decimal"] = _decimal_view(result)
    text = json.dumps(envelope, indent=2, sort_keys=False) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        _write_csv(args.csv, rows)
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
