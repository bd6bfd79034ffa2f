"""Buyer-seller networks with a fee-charging platform.

Exact competitive prices via max-weight matching, the sellers' join game,
revenue-optimal fees and welfare loss measurements.
"""

from .model import (
    Allocation,
    EquilibriumReport,
    Market,
    MixedProfile,
    PlatformScenario,
    PureProfile,
    make_market,
    parse_rational,
    validate_market,
)
from .matching import WelfareQuery, max_weight_matching, optimal_welfare, welfare
from .prices import check_competitive_equilibrium, max_prices, min_prices
from .game import (
    alpha_sweep,
    algorithm1_find_pure,
    best_response_dynamics,
    check_pure_equilibrium,
    enumerate_pure_equilibria,
    on_off_prices,
)
from .fixtures import generate_fixture, generate_random

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "EquilibriumReport",
    "Market",
    "MixedProfile",
    "PlatformScenario",
    "PureProfile",
    "WelfareQuery",
    "algorithm1_find_pure",
    "alpha_sweep",
    "best_response_dynamics",
    "check_competitive_equilibrium",
    "check_pure_equilibrium",
    "enumerate_pure_equilibria",
    "generate_fixture",
    "generate_random",
    "make_market",
    "max_prices",
    "max_weight_matching",
    "min_prices",
    "on_off_prices",
    "optimal_welfare",
    "parse_rational",
    "validate_market",
    "welfare",
]
