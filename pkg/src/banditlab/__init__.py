"""Seeded, reproducible online-learning laboratory."""

from .core import (BANDIT, BANDIT_COST, FULL, OUTCOME, SEMI, BanditCost, BanditReward, FullCosts, History,
                   OutcomeRow, RegretReport, RngStream, SemiBandit, best_fixed_hindsight, doubling_wrap,
                   pseudo_regret, run_episode)
from .errors import (BanditLabError, ConfigurationError, DataError, DomainError, PropertyViolation,
                     ResourceLimitError)

__version__ = "0.1.0"

__all__ = [
    "BANDIT", "BANDIT_COST", "FULL", "OUTCOME", "SEMI", "BanditCost", "BanditReward", "FullCosts", "History",
    "OutcomeRow", "RegretReport", "RngStream", "SemiBandit", "best_fixed_hindsight", "doubling_wrap",
    "pseudo_regret", "run_episode", "BanditLabError", "ConfigurationError", "DataError", "DomainError",
    "PropertyViolation", "ResourceLimitError",
]
