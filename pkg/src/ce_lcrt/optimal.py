"""Budget-constrained locally optimal designs.

Closed-form decimal optima exist for crossover and parallel-arm layouts
through the theta ratio; stepped-wedge layouts (complete or incomplete)
get a one-dimensional numeric relaxation. The integer optimum is always
an exhaustive scan of the feasible design space with deterministic
tie-breaking (smallest cluster count, then smallest cluster-period size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import ndtr

from ._core import kernels
from .correlation import IccVector, validate_ordering
from .designs import BudgetModel, DesignFamily, TrialLayout
from .errors import (
    EmptyFeasibleSetError,
    IccConstraintError,
    InvalidInputError,
    NoInteriorOptimumError,
)
from .incomplete import engine_for
from .variance import EconModel, eigen_min_grid, theorem2_variance_grid

DECIMAL_LOD = "DecimalLOD"
INTEGER_LOD = "IntegerLOD"

# Tolerance for the stepped-wedge decimal line search (absolute in K).
SW_DECIMAL_TOL = 1e-6


@dataclass(frozen=True)
class DesignSolution:
    """An (I, K) design with its variance and power.

    Decimal solutions carry continuous I and K (the theoretical
    benchmark); integer solutions satisfy feasibility and divisibility.
    """

    I: float
    K: float
    J: int
    variance: float
    power: float
    kind: str
    theta: float | None = None

    def to_dict(self) -> dict:
        out = {"I": self.I, "K": self.K, "J": self.J,
               "variance": self.variance, "power": self.power, "kind": self.kind}
        if self.theta is not None:
            out["theta"] = self.theta
        return out


def theta_crxo(rho: IccVector, lambda_r: float) -> float:
    """Cluster-vs-individual tradeoff ratio for crossover layouts.

    May be nonpositive; callers treat that as "no interior optimum".
    """
    if lambda_r <= 0:
        raise InvalidInputError("standardized ceiling ratio must be positive")
    value = kernels.theta_crxo(*rho.as_tuple(), float(lambda_r))
    if math.isnan(value):
        raise InvalidInputError("theta denominator vanishes for this configuration")
    return value


def theta_pa(rho: IccVector, lambda_r: float, J: int) -> float:
    """Parallel-arm counterpart of theta_crxo (depends on the period count)."""
    if lambda_r <= 0:
        raise InvalidInputError("standardized ceiling ratio must be positive")
    value = kernels.theta_pa(*rho.as_tuple(), float(lambda_r), float(J))
    if math.isnan(value):
        raise InvalidInputError("theta denominator vanishes for this configuration")
    return value


def theta_for(layout: TrialLayout, rho: IccVector, econ: EconModel) -> float:
    if layout.family is DesignFamily.CRXO:
        return theta_crxo(rho, econ.lambda_r)
    if layout.family is DesignFamily.PA:
        return theta_pa(rho, econ.lambda_r, layout.periods)
    raise InvalidInputError(f"theta has no closed form for {layout.family.value}")


def _closed_form_prefactor(layout: TrialLayout, rho: IccVector, econ: EconModel) -> float:
    """Variance prefactor: variance = prefactor * (K + theta) / (I * K)."""
    pi = float(layout.allocation)
    J = layout.periods
    lr = econ.lambda_r
    r = rho
    if math.isinf(lr):
        t2 = r.rho0E - r.rho1E
        if layout.family is DesignFamily.PA:
            t2 = t2 + J * r.rho1E
    else:
        inv = 1.0 / lr
        t2 = (r.rho0E - r.rho1E) + 2.0 * (r.rho1EC - r.rho0EC) * inv \
            + (r.rho0C - r.rho1C) * inv * inv
        if layout.family is DesignFamily.PA:
            t2 = t2 + J * (r.rho1E - 2.0 * r.rho1EC * inv + r.rho1C * inv * inv)
    scale = (econ.ceiling_ratio * econ.sigma_e) ** 2
    return scale * t2 / (J * pi * (1.0 - pi))


def decimal_lod_closed(layout: TrialLayout, rho: IccVector, econ: EconModel,
                       budget: BudgetModel) -> DesignSolution:
    """Closed-form continuous optimum for crossover/parallel-arm layouts.

    Raises NoInteriorOptimumError when theta <= 0, in which case no
    interior stationary point exists and the integer search is the
    authority.
    """
    theta = theta_for(layout, rho, econ)
    if theta <= 0:
        raise NoInteriorOptimumError(
            f"theta = {theta:.6g} <= 0: no interior optimum; cluster-period size "
            "is driven to its bound")
    J = layout.periods
    c1, c2 = budget.cluster_cost, budget.individual_cost
    k_dec = math.sqrt(c1 * theta / (c2 * J))
    i_dec = budget.total / (c1 + math.sqrt(theta * c1 * c2 * J))
    prefactor = _closed_form_prefactor(layout, rho, econ)
    g = (math.sqrt(c1) + math.sqrt(theta * c2 * J)) ** 2
    variance = prefactor * g / budget.total
    return DesignSolution(I=i_dec, K=k_dec, J=J, variance=variance,
                          power=kernels.power_from_variance(variance, econ.inmb, econ.z_crit),
                          kind=DECIMAL_LOD, theta=theta)


def decimal_lod_sw(layout: TrialLayout, rho: IccVector, econ: EconModel,
                   budget: BudgetModel) -> DesignSolution:
    """Numeric continuous optimum for stepped-wedge layouts: golden-section
    over K in [2, K_max] with the budget-exhausting continuous cluster count."""
    J = layout.periods
    if layout.family is DesignFamily.SW:
        i_dec, k_dec, variance = kernels.sw_decimal_design(
            float(J), float(layout.sequences), *rho.as_tuple(),
            econ.sigma_e, econ.sigma_c, econ.ceiling_ratio,
            budget.total, budget.cluster_cost, budget.individual_cost,
            float(budget.max_cluster_size))
    else:
        engine = engine_for(layout)
        i_dec, k_dec, variance = engine.decimal_design(rho, econ, budget)
    if math.isnan(variance):
        raise NoInteriorOptimumError("no valid continuous design (variance undefined)")
    return DesignSolution(I=i_dec, K=k_dec, J=J, variance=variance,
                          power=kernels.power_from_variance(variance, econ.inmb, econ.z_crit),
                          kind=DECIMAL_LOD)


def decimal_lod(layout: TrialLayout, rho: IccVector, econ: EconModel,
                budget: BudgetModel) -> DesignSolution:
    if layout.family in (DesignFamily.CRXO, DesignFamily.PA):
        return decimal_lod_closed(layout, rho, econ, budget)
    return decimal_lod_sw(layout, rho, econ, budget)


def _feasible_arrays(layout: TrialLayout, budget: BudgetModel) -> tuple[np.ndarray, np.ndarray]:
    """Feasible (I, K) pairs in scan order as two integer arrays."""
    pairs_i: list[int] = []
    pairs_k: list[int] = []
    for I in range(2, budget.max_clusters + 1):
        if not layout.admits_cluster_count(I):
            continue
        base = I * budget.cluster_cost
        if base > budget.total:
            continue
        per_k = budget.individual_cost * layout.cluster_periods(I)
        k_cap = min(budget.max_cluster_size, int((budget.total - base) // per_k))
        if k_cap >= 2:
            ks = range(2, k_cap + 1)
            pairs_i.extend([I] * len(ks))
            pairs_k.extend(ks)
    if not pairs_i:
        raise EmptyFeasibleSetError("no (I, K) design fits the budget")
    return np.asarray(pairs_i), np.asarray(pairs_k)


def variance_grid(layout: TrialLayout, I_arr: np.ndarray, K_arr: np.ndarray,
                  rho: IccVector, econ: EconModel) -> np.ndarray:
    """Variance for each feasible pair; NaN where the correlation matrix
    is not positive definite at that K or the design is unidentifiable."""
    I = I_arr.astype(float)
    K = K_arr.astype(float)
    J = layout.periods
    pd_ok = eigen_min_grid(rho, float(J), K) > 1e-10
    r = rho.as_tuple()
    se, sc, lam = econ.sigma_e, econ.sigma_c, econ.ceiling_ratio
    if layout.family in (DesignFamily.CRXO, DesignFamily.PA):
        pi = float(layout.allocation)
        ke = 1.0 + (K - 1.0) * r[0] - K * r[1]
        kc = 1.0 + (K - 1.0) * r[2] - K * r[3]
        kec = r[6] + (K - 1.0) * r[4] - K * r[5]
        num = kc * sc * sc - 2.0 * lam * kec * sc * se + lam * lam * ke * se * se
        variance = num / (I * J * K * pi * (1.0 - pi))
        if layout.family is DesignFamily.PA:
            num2 = r[3] * sc * sc - 2.0 * lam * r[5] * sc * se + lam * lam * r[1] * se * se
            variance = variance + num2 / (I * pi * (1.0 - pi))
    elif layout.family is DesignFamily.SW:
        u, v, w = kernels.sw_design_constants(float(layout.sequences), float(J))
        variance = theorem2_variance_grid(I, float(J), K, u * I, v * I, w * I * I, rho, econ)
    else:
        engine = engine_for(layout)
        variance = engine.variance_pairs(I_arr, K_arr, rho, econ)
    variance = np.where(pd_ok & (variance > 0), variance, np.nan)
    return variance


def lod_search(layout: TrialLayout, rho: IccVector, econ: EconModel,
               budget: BudgetModel) -> DesignSolution:
    """Exhaustive integer optimum over the feasible design space."""
    violations = validate_ordering(rho)
    if violations:
        raise IccConstraintError(violations)
    I_arr, K_arr = _feasible_arrays(layout, budget)
    variance = variance_grid(layout, I_arr, K_arr, rho, econ)
    with np.errstate(invalid="ignore"):
        powers = ndtr(abs(econ.inmb) / np.sqrt(variance) - econ.z_crit)
    powers = np.where(np.isnan(powers), -np.inf, powers)
    best = int(np.argmax(powers))
    if powers[best] == -np.inf:
        raise EmptyFeasibleSetError(
            "no budget-feasible design admits a valid correlation structure")
    return DesignSolution(I=int(I_arr[best]), K=int(K_arr[best]), J=layout.periods,
                          variance=float(variance[best]), power=float(powers[best]),
                          kind=INTEGER_LOD)


def lod_search_over_J(layout: TrialLayout, J_range: Iterable[int], rho: IccVector,
                      econ: EconModel, budget: BudgetModel) -> DesignSolution:
    """Integer optimum with the period count searched over a range;
    ties break toward the smaller period count."""
    best: DesignSolution | None = None
    attempted = False
    for J in J_range:
        candidate_layout = layout.with_periods(J)
        attempted = True
        try:
            sol = lod_search(candidate_layout, rho, econ, budget)
        except EmptyFeasibleSetError:
            continue
        if best is None or sol.power > best.power:
            best = sol
    if not attempted:
        raise InvalidInputError("empty period-count range")
    if best is None:
        raise EmptyFeasibleSetError("no period count admits a feasible design")
    return best


def optimal_lambda_r(rho: IccVector) -> float:
    """Standardized ceiling ratio minimizing the crossover theta.

    Solves the stationarity quadratic; among positive roots with a
    positive theta denominator, returns the one with the smallest theta.
    """
    r = rho
    a_e, a_c = 1.0 - r.rho1E, 1.0 - r.rho1C
    b_ec = r.rho1EC - r.rho2EC
    d_e, d_c = r.rho0E - r.rho1E, r.rho0C - r.rho1C
    d_ec = r.rho1EC - r.rho0EC
    t2 = 2.0 * a_e * d_ec - 2.0 * b_ec * d_e
    t1 = 2.0 * a_e * d_c - 2.0 * a_c * d_e
    t0 = 2.0 * b_ec * d_c - 2.0 * a_c * d_ec

    def denominator(x: float) -> float:
        return d_e * x * x + 2.0 * d_ec * x + d_c

    if t2 == 0.0:
        if t1 == 0.0:
            raise NoInteriorOptimumError("stationarity equation is degenerate")
        roots = [-t0 / t1]
    else:
        disc = t1 * t1 - 4.0 * t2 * t0
        if disc < 0:
            raise NoInteriorOptimumError("no real stationary point for theta")
        sq = math.sqrt(disc)
        roots = [(-t1 + sq) / (2.0 * t2), (-t1 - sq) / (2.0 * t2)]

    def is_local_min(x: float) -> bool:
        h = 1e-4 * max(1.0, abs(x))
        base = theta_crxo(rho, x)
        for probe in (x - h, x + h):
            if probe <= 0 or denominator(probe) <= 0:
                continue
            if theta_crxo(rho, probe) < base - 1e-12:
                return False
        return True

    admissible = [x for x in roots if x > 0 and denominator(x) > 0 and is_local_min(x)]
    if not admissible:
        raise NoInteriorOptimumError("no admissible positive root for the ceiling ratio")
    return min(admissible, key=lambda x: theta_crxo(rho, x))
