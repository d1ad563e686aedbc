"""Design engine for cost-effectiveness longitudinal cluster randomized trials."""

from ._core import BACKEND
from .correlation import IccBox, IccVector
from .designs import BudgetModel, DesignFamily, DesignPattern, TrialLayout
from .variance import EconModel, VarianceReport

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BudgetModel",
    "DesignFamily",
    "DesignPattern",
    "EconModel",
    "IccBox",
    "IccVector",
    "TrialLayout",
    "VarianceReport",
    "__version__",
]
