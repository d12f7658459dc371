"""Renewable supply-inventory games on a make-to-stock queue.

Closed-form equilibria and centralized benchmarks for the single
BS/supplier game, transfer-payment coordination, renewable/grid load
splitting, truthful multi-BS capacity allocation mechanisms, and a
deterministic event simulator that validates the queue analytics.
"""

__version__ = "0.1.0"

from .core import (
    DOMAIN_EPS,
    NormalizedParams,
    StrategyPair,
    SystemParams,
    approximation_error,
    exact_backlog_discrete,
    mean_backlog,
    mean_inventory,
    normalize,
)
from .errors import (
    AllGridRegimeError,
    ConvergenceError,
    DegenerateGameError,
    GreenstockError,
    ParameterError,
)
from .game import (
    EquilibriumReport,
    GameInstance,
    TransferContract,
    acceptable_contract,
    auxiliary_f,
    best_response_dynamics,
    bs_best_response,
    centralized_cost,
    centralized_optimum,
    competition_penalty,
    coordinated_costs,
    cost_bs,
    cost_rps,
    epsilon_range,
    equilibrium_report,
    nash_equilibrium,
    power_split,
    rps_best_response,
    total_cost,
)
from .allocation import (
    AllocationResult,
    AuditReport,
    BsProfile,
    DeviationGrid,
    Market,
    OrderVector,
    adaptive_uniform_allocation,
    breakeven_lambda,
    breakeven_rate,
    optimal_demand,
    pareto_priority_allocation,
    post_allocation_cost,
    proportional_allocation,
    social_cost,
    social_optimum_bruteforce,
    truthful_orders,
    truthfulness_audit,
)
from .simulate import (
    Exponential,
    HyperExp2,
    SimConfig,
    SimStats,
    TruncatedNormal,
    empirical_pdf_compare,
    replicate,
    simulate,
)
