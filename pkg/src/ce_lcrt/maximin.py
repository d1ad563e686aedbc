"""MaxiMin designs: worst-case relative efficiency over an ICC box.

The outer loop scans the budget-feasible (I, K) grid; the inner loop
finds the ICC vector minimizing the relative efficiency of the candidate
against the continuous-relaxation optimum, subject to the ordering
constraints and positive definiteness of the correlation matrix. The
candidate kept is the one whose worst-case efficiency is largest among
those with worst-case efficiency in (0, 1].

The inner minimizer is derivative-free and deterministic: box corners,
center, and per-axis extreme points (projected to feasibility), a
512-point Sobol scan keeping the best eight, then a local simplex
descent from each kept point with infeasible probes penalized.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .correlation import ICC_FIELDS, IccBox, IccVector, PD_STRICTNESS_TOL
from .designs import BudgetModel, DesignFamily, TrialLayout
from .errors import DeadlineExceededError, EmptyFeasibleSetError, InvalidInputError
from .incomplete import engine_for
from .optimal import _feasible_arrays, decimal_lod, theta_for
from .variance import EconModel, theorem2_variance_grid
from ._core import kernels

SCAN_POINTS = 512
SCAN_KEEP = 8
SIMPLEX_XATOL = 1e-7
SIMPLEX_MAXITER = 400
RE_UPPER_SLACK = 1e-9
_PENALTY = 10.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MaximinSolution:
    """A MaxiMin design with its worst-case configuration and audit trace."""

    I: int
    K: int
    J: int
    worst_re: float
    worst_rho: IccVector
    inner_trace: tuple[tuple[IccVector, IccVector, float], ...] | None = None

    def to_dict(self, include_trace: bool = False) -> dict:
        out = {"I": self.I, "K": self.K, "J": self.J,
               "worstCaseRE": self.worst_re,
               "worstRho": self.worst_rho.to_dict()}
        if include_trace and self.inner_trace is not None:
            out["innerTrace"] = [
                {"start": s.to_dict(), "converged": c.to_dict(), "re": re}
                for s, c, re in self.inner_trace]
        return out


# -- Batched feasibility -------------------------------------------------------


def _ordering_violation(rho_mat: np.ndarray) -> np.ndarray:
    """Total constraint slack per row; zero means admissible."""
    r0e, r1e, r0c, r1c = rho_mat[:, 0], rho_mat[:, 1], rho_mat[:, 2], rho_mat[:, 3]
    r0ec, r1ec, r2ec = rho_mat[:, 4], rho_mat[:, 5], rho_mat[:, 6]
    v = np.maximum(r1e - r0e, 0.0) + np.maximum(r1c - r0c, 0.0)
    v += np.maximum(r0ec - np.minimum(r0e, r0c), 0.0)
    v += np.maximum(r1ec - np.minimum(r1e, r1c), 0.0)
    v += np.maximum(r1ec - r0ec, 0.0) + np.maximum(r0ec - r2ec, 0.0)
    for col, lo, hi in ((0, 0.0, 1.0), (1, 0.0, 1.0), (2, 0.0, 1.0), (3, 0.0, 1.0),
                        (4, -1.0, 1.0), (5, -1.0, 1.0), (6, -1.0, 1.0)):
        x = rho_mat[:, col]
        v += np.maximum(lo - x, 0.0) + np.maximum(x - hi, 0.0)
    return v


def _model_psd_violation(rho_mat: np.ndarray) -> np.ndarray:
    """Slack of the realizability conditions: the three random-effect
    covariance components must each be PSD for some generating model."""
    r0e, r1e, r0c, r1c = rho_mat[:, 0], rho_mat[:, 1], rho_mat[:, 2], rho_mat[:, 3]
    r0ec, r1ec, r2ec = rho_mat[:, 4], rho_mat[:, 5], rho_mat[:, 6]
    cluster = r1e * r1c - r1ec ** 2
    period = (r0e - r1e) * (r0c - r1c) - (r0ec - r1ec) ** 2
    resid = (1.0 - r0e) * (1.0 - r0c) - (r2ec - r0ec) ** 2
    zero = np.zeros_like(cluster)
    return (np.maximum(zero - cluster, 0.0) + np.maximum(zero - period, 0.0)
            + np.maximum(zero - resid, 0.0))


def _eigen_min_rows(rho_mat: np.ndarray, J: float, K: float) -> np.ndarray:
    r0e, r1e, r0c, r1c = rho_mat[:, 0], rho_mat[:, 1], rho_mat[:, 2], rho_mat[:, 3]
    r0ec, r1ec, r2ec = rho_mat[:, 4], rho_mat[:, 5], rho_mat[:, 6]
    ke = 1.0 + (K - 1.0) * r0e - K * r1e
    kc = 1.0 + (K - 1.0) * r0c - K * r1c
    kec = r2ec + (K - 1.0) * r0ec - K * r1ec
    m1 = 0.5 * (2.0 + (K - 1.0) * (r0e + r0c) + (J - 1.0) * K * (r1e + r1c))
    xi1 = ((K - 1.0) * (r0e - r0c) + (J - 1.0) * K * (r1e - r1c)) ** 2 \
        + 4.0 * (r2ec + (K - 1.0) * r0ec + (J - 1.0) * K * r1ec) ** 2
    l1 = m1 - 0.5 * np.sqrt(xi1)
    l2 = 0.5 * (ke + kc) - 0.5 * np.sqrt((ke - kc) ** 2 + 4.0 * kec * kec)
    l3 = 0.5 * (2.0 - r0e - r0c) - 0.5 * np.sqrt((r0e - r0c) ** 2
                                                 + 4.0 * (r2ec - r0ec) ** 2)
    out = np.where(J > 1, np.minimum(l1, l2), l1)
    return np.where(K > 1, np.minimum(out, l3), out)


def project_to_constraints(rho_mat: np.ndarray, box: IccBox, passes: int = 6) -> np.ndarray:
    """Push points toward the admissible region: enforce the ordering
    chain, then clip back into the box, a few times over."""
    lo = np.asarray(box.rho_min.as_tuple())
    hi = np.asarray(box.rho_max.as_tuple())
    x = np.clip(np.array(rho_mat, dtype=float), lo, hi)
    for _ in range(passes):
        x[:, 1] = np.minimum(x[:, 1], x[:, 0])                       # rho1E <= rho0E
        x[:, 3] = np.minimum(x[:, 3], x[:, 2])                       # rho1C <= rho0C
        x[:, 4] = np.minimum(x[:, 4], np.minimum(x[:, 0], x[:, 2]))  # rho0EC cap
        x[:, 6] = np.maximum(x[:, 6], x[:, 4])                       # rho2EC >= rho0EC
        x[:, 5] = np.minimum(x[:, 5], np.minimum(np.minimum(x[:, 1], x[:, 3]), x[:, 4]))
        x = np.clip(x, lo, hi)
    return x


# -- The inner objective -------------------------------------------------------


class InnerProblem:
    """Relative efficiency as a function of the ICC vector, at a fixed
    candidate cluster-period size.

    The candidate cluster count enters the efficiency as a pure scale
    factor, so the worst-case ICC vector is found once per (K,
    composition) and the efficiency is rescaled per cluster count.
    """

    def __init__(self, layout: TrialLayout, K: float, econ: EconModel,
                 budget: BudgetModel, composition_I: int | None = None,
                 model_psd: bool = False) -> None:
        self.layout = layout
        self.K = float(K)
        self.econ = econ
        self.budget = budget
        self.J = layout.periods
        self.family = layout.family
        self.model_psd = model_psd
        if self.family is DesignFamily.SW_INCOMPLETE:
            self.engine = engine_for(layout)
            self.int_groups = self.engine.normalized_groups(composition_I)
            self.dec_groups = self.engine.proportional_groups()
            self.dec_jbar = self.engine.mean_observed_periods(self.dec_groups)

    def scale_factor(self, rho_row: np.ndarray) -> np.ndarray:
        """Efficiency divided by the cluster count, vectorized over rows.

        +inf marks valid-but-degenerate points (no interior optimum or an
        undefined variance), matching the algorithm's sentinel.
        """
        econ, budget, J = self.econ, self.budget, self.J
        c1, c2, B = budget.cluster_cost, budget.individual_cost, budget.total
        if self.family in (DesignFamily.CRXO, DesignFamily.PA):
            theta = self._theta_rows(rho_row)
            g = (np.sqrt(c1) + np.sqrt(np.maximum(theta, 0.0) * c2 * J)) ** 2
            with np.errstate(invalid="ignore", divide="ignore"):
                psi = self.K * g / (B * (theta + self.K))
            return np.where(theta > 0, psi, np.inf)
        if self.family is DesignFamily.SW:
            q = float(self.layout.sequences)
            out = np.empty(rho_row.shape[0])
            for t in range(rho_row.shape[0]):
                r = tuple(rho_row[t])
                vi = kernels.sw_unit_variance(float(J), q, self.K, *r,
                                              econ.sigma_e, econ.sigma_c,
                                              econ.ceiling_ratio)
                _, _, vd = kernels.sw_decimal_design(
                    float(J), q, *r, econ.sigma_e, econ.sigma_c,
                    econ.ceiling_ratio, B, c1, c2, float(budget.max_cluster_size))
                ratio = vd / vi if vi > 0 else math.nan
                out[t] = ratio if math.isfinite(ratio) and ratio > 0 else math.inf
            return out
        else:
            def unit_var(rho_m: np.ndarray, k: np.ndarray) -> np.ndarray:
                return self.engine.unit_variance_batch(self.int_groups, k, rho_m, econ)
            def unit_var_dec(rho_m: np.ndarray, k: np.ndarray) -> np.ndarray:
                return self.engine.unit_variance_batch(self.dec_groups, k, rho_m, econ)
            v_int = unit_var(rho_row, np.full(rho_row.shape[0], self.K))
            v_dec = _vdec_rows(unit_var_dec, rho_row, self.dec_jbar, c1, c2, B,
                               float(budget.max_cluster_size))
        with np.errstate(invalid="ignore", divide="ignore"):
            psi = v_dec / v_int
        return np.where(np.isfinite(psi) & (psi > 0), psi, np.inf)

    def _theta_rows(self, rho_mat: np.ndarray) -> np.ndarray:
        lr = self.econ.lambda_r
        r0e, r1e, r0c, r1c = rho_mat[:, 0], rho_mat[:, 1], rho_mat[:, 2], rho_mat[:, 3]
        r0ec, r1ec, r2ec = rho_mat[:, 4], rho_mat[:, 5], rho_mat[:, 6]
        if self.family is DesignFamily.CRXO:
            ne, nc, nec = 1.0 - r1e, 1.0 - r1c, r1ec - r2ec
            de, dc, dec = r0e - r1e, r0c - r1c, r1ec - r0ec
        else:
            J = self.J
            ne, nc = 1.0 + (J - 1.0) * r1e, 1.0 + (J - 1.0) * r1c
            nec = (1.0 - J) * r1ec - r2ec
            de, dc = r0e + (J - 1.0) * r1e, r0c + (J - 1.0) * r1c
            dec = (1.0 - J) * r1ec - r0ec
        if lr > 1.0:
            inv = 1.0 / lr
            num = ne + 2.0 * nec * inv + nc * inv * inv
            den = de + 2.0 * dec * inv + dc * inv * inv
        else:
            num = ne * lr * lr + 2.0 * nec * lr + nc
            den = de * lr * lr + 2.0 * dec * lr + dc
        with np.errstate(invalid="ignore", divide="ignore"):
            theta = num / den - 1.0
        return np.where(den != 0, theta, np.nan)

    def feasibility_violation(self, rho_mat: np.ndarray, box: IccBox) -> np.ndarray:
        lo = np.asarray(box.rho_min.as_tuple())
        hi = np.asarray(box.rho_max.as_tuple())
        v = np.maximum(lo - rho_mat, 0.0).sum(axis=1) \
            + np.maximum(rho_mat - hi, 0.0).sum(axis=1)
        v += _ordering_violation(rho_mat)
        if self.model_psd:
            v += _model_psd_violation(rho_mat)
        eig = _eigen_min_rows(rho_mat, float(self.J), self.K)
        v += np.maximum(PD_STRICTNESS_TOL - eig, 0.0) * (eig <= PD_STRICTNESS_TOL)
        return v


def _vdec_rows(unit_var: Callable[[np.ndarray, np.ndarray], np.ndarray],
               rho_mat: np.ndarray, jbar: float, c1: float, c2: float,
               budget_total: float, k_max: float) -> np.ndarray:
    """Continuous-relaxation optimal variance per row, by lockstep
    golden-section over the cluster-period size."""
    n = rho_mat.shape[0]

    def objective(k: np.ndarray) -> np.ndarray:
        return unit_var(rho_mat, k) * (c1 + c2 * jbar * k) / budget_total

    lo = np.full(n, 2.0)
    hi = np.full(n, k_max)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while float((hi - lo).max()) > 1e-6:
        take = (f1 < f2) | np.isnan(f2)
        hi = np.where(take, x2, hi)
        lo = np.where(take, lo, x1)
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1, f2 = objective(x1), objective(x2)
    k_best = 0.5 * (lo + hi)
    f_best = objective(k_best)
    for edge in (np.full(n, 2.0), np.full(n, k_max)):
        f_edge = objective(edge)
        better = np.isnan(f_best) | (f_edge < f_best)
        f_best = np.where(better & ~np.isnan(f_edge), f_edge, f_best)
    return f_best


# -- The inner minimization schedule ------------------------------------------


def _deterministic_seeds(box: IccBox) -> np.ndarray:
    lo = np.asarray(box.rho_min.as_tuple())
    hi = np.asarray(box.rho_max.as_tuple())
    dims = len(ICC_FIELDS)
    corners = np.array([[hi[d] if (mask >> d) & 1 else lo[d] for d in range(dims)]
                        for mask in range(2 ** dims)])
    center = 0.5 * (lo + hi)
    axis_points = []
    for d in range(dims):
        for bound in (lo[d], hi[d]):
            p = center.copy()
            p[d] = bound
            axis_points.append(p)
    return np.vstack([corners, center[None, :], np.array(axis_points)])


def _sobol_points(box: IccBox, n: int) -> np.ndarray:
    lo = np.asarray(box.rho_min.as_tuple())
    hi = np.asarray(box.rho_max.as_tuple())
    sampler = qmc.Sobol(d=len(ICC_FIELDS), scramble=False)
    return lo + sampler.random(n) * (hi - lo)


@dataclass
class _InnerResult:
    rho: IccVector
    scale: float
    trace: tuple[tuple[IccVector, IccVector, float], ...]


def _minimize_inner(problem: InnerProblem, box: IccBox,
                    extra_seeds: Sequence[IccVector] = ()) -> _InnerResult:
    """Deterministic multi-start minimization of the efficiency scale
    factor; returns the best feasible point seen anywhere."""
    best_val = np.inf
    best_x: np.ndarray | None = None

    def consider(rho_mat: np.ndarray, values: np.ndarray) -> None:
        nonlocal best_val, best_x
        for row, val in zip(rho_mat, values):
            if val < best_val:
                best_val = float(val)
                best_x = row.copy()

    def evaluate_feasible(rho_mat: np.ndarray) -> np.ndarray:
        """Scale factor with +inf at infeasible rows."""
        bad = problem.feasibility_violation(rho_mat, box) > 0
        vals = problem.scale_factor(rho_mat)
        return np.where(bad, np.inf, vals)

    seeds = project_to_constraints(_deterministic_seeds(box), box)
    if extra_seeds:
        extra = project_to_constraints(
            np.array([s.as_tuple() for s in extra_seeds]), box)
        seeds = np.vstack([seeds, extra])
    seed_vals = evaluate_feasible(seeds)
    consider(seeds, seed_vals)

    scan = project_to_constraints(_sobol_points(box, SCAN_POINTS), box)
    scan_vals = evaluate_feasible(scan)
    consider(scan, scan_vals)

    pool = np.vstack([seeds, scan])
    pool_vals = np.concatenate([seed_vals, scan_vals])
    order = np.argsort(pool_vals, kind="stable")
    starts = []
    seen: set[bytes] = set()
    for idx in order:
        if not np.isfinite(pool_vals[idx]):
            break
        key = pool[idx].tobytes()
        if key in seen:
            continue
        seen.add(key)
        starts.append(pool[idx])
        if len(starts) == SCAN_KEEP:
            break

    lo = np.asarray(box.rho_min.as_tuple())
    hi = np.asarray(box.rho_max.as_tuple())
    widths = hi - lo
    free = np.flatnonzero(widths > 0)
    trace: list[tuple[IccVector, IccVector, float]] = []

    if free.size > 0:
        def from_scaled(s: np.ndarray) -> np.ndarray:
            full = lo.copy()
            full[free] = lo[free] + s * widths[free]
            return full

        def nm_objective(s: np.ndarray) -> float:
            full = from_scaled(np.asarray(s, dtype=float))
            row = full[None, :]
            violation = float(problem.feasibility_violation(row, box)[0])
            if violation > 0:
                return _PENALTY + violation
            val = float(problem.scale_factor(row)[0])
            nonlocal best_val, best_x
            if val < best_val:
                best_val, best_x = val, full.copy()
            return val

        for start in starts:
            s0 = (start[free] - lo[free]) / widths[free]
            res = minimize(nm_objective, s0, method="Nelder-Mead",
                           options={"xatol": SIMPLEX_XATOL, "fatol": np.inf,
                                    "maxiter": SIMPLEX_MAXITER, "disp": False})
            end = from_scaled(np.clip(res.x, 0.0, 1.0))
            end = project_to_constraints(end[None, :], box)[0]
            end_val = float(evaluate_feasible(end[None, :])[0])
            consider(end[None, :], np.array([end_val]))
            trace.append((IccVector(*start), IccVector(*end), end_val))

    if best_x is None or not np.isfinite(best_val):
        raise InvalidInputError(
            "no feasible ICC configuration in the box at this design size", field="iccBox")
    return _InnerResult(IccVector(*best_x), best_val, tuple(trace))


# -- Public operations ---------------------------------------------------------


def relative_efficiency(layout: TrialLayout, rho: IccVector, I: float, K: float,
                        econ: EconModel, budget: BudgetModel) -> float:
    """Efficiency of an (I, K) design against the continuous-relaxation
    optimum at the same ICC vector; +inf sentinel when the tradeoff ratio
    is nonpositive or either variance is undefined."""
    if layout.family in (DesignFamily.CRXO, DesignFamily.PA):
        try:
            theta = theta_for(layout, rho, econ)
        except InvalidInputError:
            return math.inf
        if theta <= 0:
            return math.inf
        c1, c2 = budget.cluster_cost, budget.individual_cost
        g = (math.sqrt(c1) + math.sqrt(theta * c2 * layout.periods)) ** 2
        return I * K * g / (budget.total * (theta + K))
    composition = int(I) if layout.family is DesignFamily.SW_INCOMPLETE else None
    problem = InnerProblem(layout, K, econ, budget, composition_I=composition)
    row = np.asarray(rho.as_tuple(), dtype=float)[None, :]
    psi = float(problem.scale_factor(row)[0])
    return psi * I if math.isfinite(psi) else math.inf


def worst_case_icc(layout: TrialLayout, box: IccBox, I: int, K: int,
                   econ: EconModel, budget: BudgetModel,
                   extra_seeds: Sequence[IccVector] = (),
                   model_psd: bool = False) -> tuple[IccVector, float, tuple]:
    """Minimize the relative efficiency over the box at a fixed design.

    Returns (worst rho, efficiency at (I, K), per-start audit trace).
    """
    composition = int(I) if layout.family is DesignFamily.SW_INCOMPLETE else None
    problem = InnerProblem(layout, K, econ, budget, composition_I=composition,
                           model_psd=model_psd)
    result = _minimize_inner(problem, box, extra_seeds)
    return result.rho, result.scale * I, result.trace


def mmd_search(layout: TrialLayout, box: IccBox, econ: EconModel,
               budget: BudgetModel, extra_seeds: Sequence[IccVector] = (),
               deadline_seconds: float | None = None,
               want_trace: bool = False, model_psd: bool = False) -> MaximinSolution:
    """Algorithm-2 outer scan with deterministic tie-breaking.

    The worst-case ICC vector at a candidate depends on the candidate
    only through K (and, for incomplete layouts, the group composition),
    so inner minimizations are cached per (K, composition) and the
    efficiency is rescaled by the cluster count. Candidates are processed
    in descending order of a cheap upper bound (the efficiency at a fixed
    feasible probe point) so dominated candidates are skipped; the final
    selection is identical to the full scan.
    """
    t0 = time.monotonic()
    I_arr, K_arr = _feasible_arrays(layout, budget)
    n = I_arr.shape[0]
    incomplete = layout.family is DesignFamily.SW_INCOMPLETE

    def composition_of(I: int):
        if not incomplete:
            return None
        return engine_for(layout).normalized_groups(int(I))

    probe = project_to_constraints(
        0.5 * (np.asarray(box.rho_min.as_tuple()) + np.asarray(box.rho_max.as_tuple()))[None, :],
        box)[0]

    # Cheap per-candidate upper bound: efficiency at the probe point.
    upper = np.full(n, np.inf)
    probe_cache: dict[tuple, float] = {}
    for idx in range(n):
        key = (int(K_arr[idx]), composition_of(int(I_arr[idx])))
        if key not in probe_cache:
            problem = InnerProblem(layout, float(K_arr[idx]), econ, budget,
                                   composition_I=int(I_arr[idx]) if incomplete else None,
                                   model_psd=model_psd)
            bad = problem.feasibility_violation(probe[None, :], box)[0] > 0
            probe_cache[key] = np.inf if bad else float(problem.scale_factor(probe[None, :])[0])
        upper[idx] = probe_cache[key] * I_arr[idx]

    order = np.argsort(-upper, kind="stable")
    inner_cache: dict[tuple, _InnerResult | None] = {}
    best_value = -np.inf
    best_idx: int | None = None
    best_result: _InnerResult | None = None

    for idx in order:
        if deadline_seconds is not None and time.monotonic() - t0 > deadline_seconds:
            raise DeadlineExceededError(
                f"MaxiMin search exceeded the {deadline_seconds:.0f}s deadline")
        if upper[idx] < best_value:
            break
        I, K = int(I_arr[idx]), int(K_arr[idx])
        key = (K, composition_of(I))
        if key not in inner_cache:
            problem = InnerProblem(layout, float(K), econ, budget,
                                   composition_I=I if incomplete else None,
                                   model_psd=model_psd)
            try:
                inner_cache[key] = _minimize_inner(problem, box)
            except InvalidInputError:
                inner_cache[key] = None
        result = inner_cache[key]
        if result is None:
            continue
        value = result.scale * I
        if not (0.0 < value <= 1.0 + RE_UPPER_SLACK):
            continue
        better = value > best_value or (
            value == best_value and best_idx is not None and (
                (I, K) < (int(I_arr[best_idx]), int(K_arr[best_idx]))))
        if better:
            best_value, best_idx, best_result = value, int(idx), result

    if best_idx is None:
        raise EmptyFeasibleSetError(
            "no feasible design attains a worst-case efficiency in (0, 1]")
    if extra_seeds:
        # Re-run the winning inner problem with the user seeds included.
        I, K = int(I_arr[best_idx]), int(K_arr[best_idx])
        problem = InnerProblem(layout, float(K), econ, budget,
                               composition_I=I if incomplete else None,
                               model_psd=model_psd)
        seeded = _minimize_inner(problem, box, extra_seeds)
        if seeded.scale < best_result.scale:
            best_result = seeded
            best_value = seeded.scale * I
    return MaximinSolution(I=int(I_arr[best_idx]), K=int(K_arr[best_idx]),
                           J=layout.periods, worst_re=float(best_value),
                           worst_rho=best_result.rho,
                           inner_trace=best_result.trace if want_trace else None)


def threads_cap() -> int:
    """Worker cap from the environment; searches currently run serially
    and this cap is honored by callers that shard work."""
    try:
        return max(1, int(os.environ.get("CE_LCRT_THREADS", "1")))
    except ValueError:
        return 1
