"""Batched GLS evaluation for incomplete stepped-wedge layouts.

Clusters sharing a treatment sequence and observation window are one
group; the information matrix is a weighted sum over groups, so the
variance at any cluster count follows from the group composition. The
continuous-relaxation benchmark uses the asymptotic (count-proportional)
composition of the staggered pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .correlation import IccVector
from .designs import BudgetModel, DesignFamily, TrialLayout
from .errors import InvalidInputError
from .variance import EconModel

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class _Group:
    treatment: tuple[int, ...]
    observed: tuple[bool, ...]
    weight: Fraction


def _group_rows(treatment: np.ndarray, observed: np.ndarray,
                denominator: int) -> tuple[_Group, ...]:
    counts: dict[tuple[tuple[int, ...], tuple[bool, ...]], int] = {}
    for z_row, obs_row in zip(treatment, observed):
        key = (tuple(int(x) for x in z_row), tuple(bool(x) for x in obs_row))
        counts[key] = counts.get(key, 0) + 1
    return tuple(sorted(
        (_Group(z, obs, Fraction(c, denominator)) for (z, obs), c in counts.items()),
        key=lambda g: (g.treatment, g.observed)))


class IncompleteEngine:
    """Evaluation helpers bound to one incomplete layout."""

    def __init__(self, layout: TrialLayout) -> None:
        if layout.family is not DesignFamily.SW_INCOMPLETE:
            raise InvalidInputError("IncompleteEngine requires an incomplete layout")
        self.layout = layout
        self.J = layout.periods

    @lru_cache(maxsize=None)
    def normalized_groups(self, I: int) -> tuple[_Group, ...]:
        """Groups with weights summing to one; the variance at I clusters
        is the unit variance of this composition divided by I."""
        pattern = self.layout.resolve_pattern(I)
        return _group_rows(pattern.treatment(), pattern.observed(), I)

    def proportional_groups(self) -> tuple[_Group, ...]:
        """Asymptotic composition backing the continuous relaxation."""
        if self.layout.pattern is not None:
            return self.normalized_groups(self.layout.pattern.clusters)
        return self.normalized_groups(2 * self.layout.sequences)

    def mean_observed_periods(self, groups: tuple[_Group, ...]) -> float:
        return float(sum(g.weight * sum(g.observed) for g in groups))

    def unit_variance_batch(self, groups: tuple[_Group, ...], K: np.ndarray,
                            rho: np.ndarray, econ: EconModel) -> np.ndarray:
        """Unit (per-cluster) INMB variance for a batch of points.

        K has shape (n,), rho has shape (n, 7). Entries that fail (a
        singular information matrix or non-PD covariance) come back NaN;
        callers gate on positive definiteness beforehand.
        """
        K = np.asarray(K, dtype=float)
        rho = np.asarray(rho, dtype=float)
        n = K.shape[0]
        J = self.J
        se, sc = econ.sigma_e, econ.sigma_c
        lam = econ.ceiling_ratio

        r0e, r1e, r0c, r1c = rho[:, 0], rho[:, 1], rho[:, 2], rho[:, 3]
        r0ec, r1ec, r2ec = rho[:, 4], rho[:, 5], rho[:, 6]

        def two_by_two(aa, ab, bb):
            return np.stack([np.stack([aa, ab], axis=-1),
                             np.stack([ab, bb], axis=-1)], axis=-2)

        sigma_b = two_by_two(r1e * se * se, r1ec * se * sc, r1c * sc * sc)
        sigma_s = two_by_two((r0e - r1e) * se * se, (r0ec - r1ec) * se * sc,
                             (r0c - r1c) * sc * sc)
        sigma_eps = two_by_two((1.0 - r0e) * se * se, (r2ec - r0ec) * se * sc,
                               (1.0 - r0c) * sc * sc)
        cp_cov = sigma_s + sigma_eps / K[:, None, None]

        eye_j = np.eye(J)
        ones_j = np.ones((J, J))
        g_full = (np.einsum("jk,nab->njakb", eye_j, cp_cov)
                  + np.einsum("jk,nab->njakb", ones_j, sigma_b)).reshape(n, 2 * J, 2 * J)

        info = np.zeros((n, 2 * J + 2, 2 * J + 2))
        valid = np.ones(n, dtype=bool)
        eye2 = np.eye(2)
        for group in groups:
            z = np.asarray(group.treatment, dtype=float)
            obs = np.asarray(group.observed, dtype=bool)
            idx = np.flatnonzero(obs)
            rows = np.empty(2 * idx.size, dtype=np.intp)
            rows[0::2] = 2 * idx
            rows[1::2] = 2 * idx + 1
            design = np.kron(np.hstack([eye_j, z[:, None]]), eye2)[rows, :]
            g_obs = g_full[np.ix_(np.arange(n), rows, rows)]
            rhs = np.broadcast_to(design, (n,) + design.shape)
            try:
                solved = np.linalg.solve(g_obs, rhs)
            except np.linalg.LinAlgError:
                solved = np.full((n,) + design.shape, np.nan)
                for t in range(n):
                    try:
                        solved[t] = np.linalg.solve(g_obs[t], design)
                    except np.linalg.LinAlgError:
                        valid[t] = False
            info += float(group.weight) * np.einsum("ri,nrj->nij", design, solved)

        variance = np.full(n, np.nan)
        for t in range(n):
            if not valid[t] or not np.all(np.isfinite(info[t])):
                continue
            try:
                cov = np.linalg.inv(info[t])
            except np.linalg.LinAlgError:
                continue
            if np.abs(info[t] @ cov - np.eye(2 * J + 2)).max() > 1e-6:
                continue
            block = cov[-2:, -2:]
            value = lam * lam * block[0, 0] + block[1, 1] - 2.0 * lam * block[0, 1]
            if value > 0 and math.isfinite(value):
                variance[t] = value
        return variance

    def variance_pairs(self, I_arr: np.ndarray, K_arr: np.ndarray,
                       rho: IccVector, econ: EconModel) -> np.ndarray:
        """Variance for feasible (I, K) pairs at a single ICC vector."""
        out = np.full(I_arr.shape[0], np.nan)
        rho_row = np.asarray(rho.as_tuple(), dtype=float)
        for I in np.unique(I_arr):
            mask = I_arr == I
            ks = K_arr[mask].astype(float)
            groups = self.normalized_groups(int(I))
            unit = self.unit_variance_batch(groups, ks,
                                            np.tile(rho_row, (ks.size, 1)), econ)
            out[mask] = unit / float(I)
        return out

    def decimal_design(self, rho: IccVector, econ: EconModel, budget: BudgetModel
                       ) -> tuple[float, float, float]:
        """Continuous optimum (I, K, variance): golden-section over K with
        the budget-exhausting continuous cluster count and the
        proportional composition."""
        groups = self.proportional_groups()
        jbar = self.mean_observed_periods(groups)
        rho_row = np.asarray(rho.as_tuple(), dtype=float)
        c1, c2, total = budget.cluster_cost, budget.individual_cost, budget.total

        def objective(k: float) -> float:
            unit = self.unit_variance_batch(groups, np.array([k]),
                                            rho_row[None, :], econ)[0]
            return unit * (c1 + c2 * jbar * k) / total

        lo, hi = 2.0, float(budget.max_cluster_size)
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1, f2 = objective(x1), objective(x2)
        while hi - lo > 1e-6:
            if f1 < f2 or math.isnan(f2):
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = objective(x1)
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = objective(x2)
        k_best = 0.5 * (lo + hi)
        f_best = objective(k_best)
        for k_edge in (2.0, float(budget.max_cluster_size)):
            f_edge = objective(k_edge)
            if not math.isnan(f_edge) and (math.isnan(f_best) or f_edge < f_best):
                k_best, f_best = k_edge, f_edge
        i_best = total / (c1 + c2 * jbar * k_best)
        return i_best, k_best, f_best


@lru_cache(maxsize=32)
def engine_for(layout: TrialLayout) -> IncompleteEngine:
    return IncompleteEngine(layout)
