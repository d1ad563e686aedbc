from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from ce_lcrt.correlation import IccVector, is_positive_definite
from ce_lcrt.designs import BudgetModel, DesignFamily, TrialLayout
from ce_lcrt.variance import EconModel


@pytest.fixture(scope="session")
def table_econ() -> EconModel:
    return EconModel(sigma_e=1.0, sigma_c=3000.0, ceiling_ratio=20000.0, inmb=4000.0)


@pytest.fixture(scope="session")
def table_budget() -> BudgetModel:
    return BudgetModel(300000.0, 3000.0, 250.0, 100, 200)


@pytest.fixture(scope="session")
def table_rho() -> IccVector:
    """First benchmark scenario row."""
    return IccVector(0.05, 0.025, 0.05, 0.025, 0.02, 0.010, 0.5)


@pytest.fixture(scope="session")
def trial_rho() -> IccVector:
    """ICCs fitted in the reinvestment-trial application."""
    return IccVector(0.048, 0.042, 0.020, 0.018, 0.007, 0.004, 0.75)


@pytest.fixture(scope="session")
def trial_econ() -> EconModel:
    return EconModel(sigma_e=6.48, sigma_c=11635.0, ceiling_ratio=216.0, inmb=2089.0)


@pytest.fixture(scope="session")
def trial_budget() -> BudgetModel:
    return BudgetModel(600000.0, 3000.0, 250.0, 100, 200)


def crxo_layout(J: int = 2) -> TrialLayout:
    return TrialLayout(DesignFamily.CRXO, J, Fraction(1, 2))


def pa_layout(J: int = 2) -> TrialLayout:
    return TrialLayout(DesignFamily.PA, J, Fraction(1, 2))


def sw_layout(Q: int, J: int) -> TrialLayout:
    return TrialLayout(DesignFamily.SW, J, sequences=Q)


def random_valid_rho(rng: np.random.Generator, J: int, K: int,
                     max_tries: int = 200) -> IccVector:
    """Sample an ICC vector satisfying the ordering constraints and the
    positive-definiteness gate at (J, K)."""
    for _ in range(max_tries):
        r0e = rng.uniform(0.01, 0.3)
        r0c = rng.uniform(0.01, 0.3)
        r1e = r0e * rng.uniform(0.0, 1.0)
        r1c = r0c * rng.uniform(0.0, 1.0)
        r0ec = min(r0e, r0c) * rng.uniform(0.0, 1.0)
        r1ec = min(r1e, r1c, r0ec) * rng.uniform(0.0, 1.0)
        r2ec = rng.uniform(r0ec, 0.9)
        rho = IccVector(r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec)
        if is_positive_definite(rho, J, K):
            return rho
    raise RuntimeError("failed to sample a valid ICC vector")
