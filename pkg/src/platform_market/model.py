"""Market data types shared by every solver in the package.

All numbers are :class:`fractions.Fraction`; nothing on the pure-equilibrium
paths ever touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class MarketError(ValueError):
    """Base class for malformed market descriptions."""


class NegativeValue(MarketError):
    pass


class DimensionMismatch(MarketError):
    pass


class BadRational(MarketError):
    pass


class NotHomogeneous(ValueError):
    """Raised by routines that only make sense for homogeneous goods."""


class TooLarge(ValueError):
    """Raised when an exhaustive enumeration would exceed its cap."""


ENUMERATION_CAP = 16


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, a decimal literal or an int into an exact Fraction.

    Decimal strings are read digit by digit, so ``"3.05"`` becomes 61/20.
    JSON floats are routed through ``repr`` for the same reason.
    """
    if isinstance(text, bool):
        raise BadRational(f"not a rational: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        text = repr(text)
    if not isinstance(text, str):
        raise BadRational(f"not a rational: {text!r}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise BadRational(f"not a rational: {text!r}") from exc


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


@dataclass(frozen=True)
class Market:
    """Buyers ``0..n-1``, sellers ``0..m-1``, values ``values[i][j]``.

    ``edges`` is the off-platform graph as a set of ``(buyer, seller)``
    pairs. A missing edge and a zero value are different things here: the
    platform adds edges, it never changes values.
    """

    n: int
    m: int
    values: tuple[tuple[Fraction, ...], ...]
    edges: frozenset[tuple[int, int]]
    costs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise DimensionMismatch("negative market size")
        if len(self.values) != self.n or any(len(row) != self.m for row in self.values):
            raise DimensionMismatch(f"values must be {self.n}x{self.m}")
        costs = self.costs if self.costs else (Fraction(0),) * self.m
        if len(costs) != self.m:
            raise DimensionMismatch(f"expected {self.m} costs, got {len(costs)}")
        object.__setattr__(self, "costs", tuple(Fraction(c) for c in costs))
        object.__setattr__(
            self, "values", tuple(tuple(Fraction(v) for v in row) for row in self.values)
        )
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in self.edges))
        for row in self.values:
            for v in row:
                if v < 0:
                    raise NegativeValue(f"negative value {v}")
        for c in self.costs:
            if c < 0:
                raise NegativeValue(f"negative cost {c}")
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.m):
                raise DimensionMismatch(f"edge {(i, j)} out of range")

    @property
    def homogeneous(self) -> bool:
        """True iff every buyer values all sellers identically."""
        return all(len(set(row)) <= 1 for row in self.values)

    @property
    def adjacency(self) -> tuple[int, ...]:
        """Per-seller bitmask of linked buyers in the off-platform graph."""
        cols = [0] * self.m
        for i, j in self.edges:
            cols[j] |= 1 << i
        return tuple(cols)

    def buyer_value(self, i: int) -> Fraction:
        """Scalar value of buyer ``i`` in a homogeneous market."""
        return self.values[i][0] if self.m else Fraction(0)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    @property
    def has_costs(self) -> bool:
        return any(self.costs)

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> "Market":
        return Market(self.n, self.m, self.values, frozenset(edges), self.costs)


def make_market(
    values: Sequence[Sequence],
    edges: Iterable[tuple[int, int]] = (),
    costs: Sequence | None = None,
    n: int | None = None,
    m: int | None = None,
) -> Market:
    """Convenience constructor that accepts anything :func:`parse_rational` does."""
    rows = [[parse_rational(v) for v in row] for row in values]
    if n is None:
        n = len(rows)
    if m is None:
        m = len(rows[0]) if rows else (len(costs) if costs else 0)
    cost_vec = tuple(parse_rational(c) for c in costs) if costs else ()
    return Market(n, m, tuple(map(tuple, rows)), frozenset(edges), cost_vec)


def validate_market(raw: Mapping) -> Market:
    """Build a :class:`Market` from the JSON market description.

    Expected keys: ``buyers`` (list of ``{"id": int}``), ``sellers`` (list of
    ``{"id": int, "cost": str}``), ``values`` (n rows of m rational strings)
    and ``edges`` (list of ``[buyer_id, seller_id]``). Ids are mapped to
    positions in list order.
    """
    try:
        buyers = list(raw["buyers"])
        sellers = list(raw["sellers"])
        values = list(raw["values"])
    except (KeyError, TypeError) as exc:
        raise DimensionMismatch(f"missing market field: {exc}") from exc
    buyer_ix = _index_ids(buyers, "buyer")
    seller_ix = _index_ids(sellers, "seller")
    n, m = len(buyers), len(sellers)
    if len(values) != n or any(len(row) != m for row in values):
        raise DimensionMismatch(f"values must be {n}x{m}")
    rows = tuple(tuple(parse_rational(v) for v in row) for row in values)
    costs = tuple(parse_rational(s.get("cost", "0")) for s in sellers)
    edges = set()
    for pair in raw.get("edges", []):
        if len(pair) != 2:
            raise DimensionMismatch(f"edge must be a pair, got {pair!r}")
        try:
            edges.add((buyer_ix[pair[0]], seller_ix[pair[1]]))
        except KeyError as exc:
            raise DimensionMismatch(f"edge {pair!r} names an unknown agent") from exc
    return Market(n, m, rows, frozenset(edges), costs)


def _index_ids(agents, kind):
    index = {}
    for pos, agent in enumerate(agents):
        ident = agent.get("id", pos) if isinstance(agent, Mapping) else agent
        if ident in index:
            raise DimensionMismatch(f"duplicate {kind} id {ident!r}")
        index[ident] = pos
    return index


def market_to_dict(market: Market) -> dict:
    return {
        "buyers": [{"id": i} for i in range(market.n)],
        "sellers": [{"id": j, "cost": format_rational(c)} for j, c in enumerate(market.costs)],
        "values": [[format_rational(v) for v in row] for row in market.values],
        "edges": [[i, j] for i, j in sorted(market.edges)],
    }


@dataclass(frozen=True)
class Allocation:
    """A partial one-to-one matching stored as sorted ``(buyer, seller)`` pairs."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        pairs = tuple(sorted((int(i), int(j)) for i, j in self.pairs))
        object.__setattr__(self, "pairs", pairs)

    @property
    def buyer_to_seller(self) -> dict[int, int]:
        return dict(self.pairs)

    @property
    def seller_to_buyer(self) -> dict[int, int]:
        return {j: i for i, j in self.pairs}

    @property
    def buyers(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.pairs)

    @property
    def sellers(self) -> frozenset[int]:
        return frozenset(j for _, j in self.pairs)

    def is_valid(self) -> bool:
        return len(self.buyers) == len(self.pairs) == len(self.sellers)


@dataclass(frozen=True)
class PureProfile:
    """The set of sellers that join the platform."""

    joined: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "joined", frozenset(self.joined))

    def to_json(self):
        return {"kind": "pure", "joined": sorted(self.joined)}


@dataclass(frozen=True)
class MixedProfile:
    """Independent join probabilities, one per seller."""

    x: tuple[Fraction, ...]

    def __post_init__(self):
        x = tuple(Fraction(p) for p in self.x)
        if any(p < 0 or p > 1 for p in x):
            raise ValueError("join probabilities must lie in [0, 1]")
        object.__setattr__(self, "x", x)

    def to_json(self):
        return {"kind": "mixed", "x": [format_rational(p) for p in self.x]}


StrategyProfile = PureProfile | MixedProfile


@dataclass(frozen=True)
class PlatformScenario:
    """A market plus the platform's fee.

    ``platforms`` is only used by the multi-platform extension: a tuple of
    ``(buyer_subset, fee)`` pairs, each fee at most ``alpha``.
    """

    market: Market
    alpha: Fraction
    platforms: tuple[tuple[frozenset[int], Fraction], ...] = ()

    def __post_init__(self):
        alpha = Fraction(self.alpha)
        if not 0 <= alpha <= 1:
            raise ValueError(f"fee must lie in [0, 1], got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        platforms = tuple((frozenset(b), Fraction(f)) for b, f in self.platforms)
        for buyers, fee in platforms:
            if not 0 <= fee <= alpha:
                raise ValueError(f"platform fee {fee} exceeds the cap {alpha}")
            if any(not 0 <= i < self.market.n for i in buyers):
                raise DimensionMismatch("platform buyer out of range")
        object.__setattr__(self, "platforms", platforms)


@dataclass(frozen=True)
class EquilibriumReport:
    profile: StrategyProfile
    alpha: Fraction
    prices: tuple[Fraction, ...]
    welfare: Fraction
    revenue: Fraction
    seller_utilities: tuple[Fraction, ...]
    is_equilibrium: bool
    certificate: tuple[Fraction, ...] = field(default=())

    @property
    def surplus(self) -> Fraction:
        """Buyer plus seller utility, i.e. welfare net of platform fees."""
        return self.welfare - self.revenue

    def to_json(self) -> dict:
        return {
            "profile": self.profile.to_json(),
            "alpha": format_rational(self.alpha),
            "prices": [format_rational(p) for p in self.prices],
            "welfare": format_rational(self.welfare),
            "revenue": format_rational(self.revenue),
            "seller_utilities": [format_rational(u) for u in self.seller_utilities],
            "is_equilibrium": self.is_equilibrium,
            "deviation_gains": [format_rational(g) for g in self.certificate],
        }


def mask_of(items: Iterable[int]) -> int:
    mask = 0
    for k in items:
        mask |= 1 << k
    return mask


def members(mask: int) -> frozenset[int]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return frozenset(out)
