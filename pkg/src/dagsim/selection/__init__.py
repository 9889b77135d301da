"""Transaction-selection game between miners of differing power."""

from .checks import (
    DistinctCount,
    FairnessReport,
    InequalityInstance,
    InequalityResult,
    distinct_count,
    fairness_check,
    lemma_ineq_check,
    random_instance,
)
from .equilibrium import (
    EquilibriumReport,
    brute_force_nash,
    exact_regrets,
    find_equilibrium,
    grid_tolerance,
)
from .model import SelectionGame, StrategyProfile
from .utility import (
    BestResponse,
    MarginalSolver,
    MonteCarloEstimate,
    best_response,
    exact_utility,
    marginal_values,
    mc_utility,
    regret,
)

__all__ = [
    "BestResponse",
    "DistinctCount",
    "EquilibriumReport",
    "FairnessReport",
    "InequalityInstance",
    "InequalityResult",
    "MarginalSolver",
    "MonteCarloEstimate",
    "SelectionGame",
    "StrategyProfile",
    "best_response",
    "brute_force_nash",
    "distinct_count",
    "exact_regrets",
    "exact_utility",
    "fairness_check",
    "find_equilibrium",
    "grid_tolerance",
    "lemma_ineq_check",
    "marginal_values",
    "mc_utility",
    "random_instance",
    "regret",
]
