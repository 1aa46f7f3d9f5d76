"""Integer money-exchange chains: simulation, exact stationary analysis and limit laws."""

from .configspace import Configuration, enumerate_omega, omega_count
from .dynamics import ChainState, ModelKind, run
from .errors import BudgetError, ConfigError
from .groups import GroupDistribution, is_connected
from .limits import LimitLaw, solve_s_star
from .weights import WeightSpec, parse_weight

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "ChainState", "ConfigError", "Configuration", "GroupDistribution",
    "LimitLaw", "ModelKind", "WeightSpec", "enumerate_omega", "is_connected",
    "omega_count", "parse_weight", "run", "solve_s_star",
]
