"""Variance and power of the incremental-net-monetary-benefit estimator.

The general closed form covers any complete schedule through the design
constants; crossover and parallel-arm layouts get their exact
specializations; incomplete layouts go through the cluster-period-mean
GLS information matrix, which doubles as the independent oracle for the
closed form on complete designs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import ndtri

from ._core import kernels
from .correlation import IccVector, icc_to_covariance, is_positive_definite, validate_ordering
from .designs import (
    BudgetModel,
    DesignConstants,
    DesignFamily,
    Schedule,
    TrialLayout,
    build_schedule,
    design_constants,
)
from .errors import (
    IccConstraintError,
    InvalidInputError,
    NotPositiveDefiniteError,
    UnidentifiableDesignError,
)


@dataclass(frozen=True)
class EconModel:
    """Economic scale of the trial: outcome spreads, willingness-to-pay,
    the target benefit, and the two-sided type-I error rate."""

    sigma_e: float
    sigma_c: float
    ceiling_ratio: float
    inmb: float
    alpha: float = 0.05

    def __post_init__(self) -> None:
        if self.sigma_e <= 0 or self.sigma_c <= 0:
            raise InvalidInputError("outcome standard deviations must be positive")
        if self.ceiling_ratio < 0:
            raise InvalidInputError("ceiling ratio must be nonnegative")
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must lie strictly between 0 and 1")

    @property
    def sd_ratio(self) -> float:
        return self.sigma_e / self.sigma_c

    @property
    def lambda_r(self) -> float:
        """Standardized ceiling ratio: willingness-to-pay rescaled by the
        relative variability of the two outcomes."""
        return self.ceiling_ratio * self.sd_ratio

    @property
    def z_crit(self) -> float:
        return float(ndtri(1.0 - self.alpha / 2.0))

    def to_dict(self) -> dict:
        return {"sigmaE": self.sigma_e, "sigmaC": self.sigma_c,
                "ceilingRatio": self.ceiling_ratio, "inmb": self.inmb,
                "alpha": self.alpha}

    @classmethod
    def from_dict(cls, data: dict) -> "EconModel":
        return cls(float(data["sigmaE"]), float(data["sigmaC"]),
                   float(data["ceilingRatio"]), float(data["inmb"]),
                   float(data.get("alpha", 0.05)))


@dataclass(frozen=True)
class VarianceReport:
    """Variance of the INMB estimator with auditable intermediates."""

    variance: float
    power: float
    kappa_e: float
    kappa_c: float
    kappa_ec: float
    U: float
    V: float
    W: float
    delta: float | None = None
    delta_star: float | None = None
    phi: float | None = None
    eta: float | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        inter = {"kappaE": self.kappa_e, "kappaC": self.kappa_c, "kappaEC": self.kappa_ec,
                 "Delta": self.delta, "DeltaStar": self.delta_star,
                 "phi": self.phi, "eta": self.eta,
                 "U": self.U, "V": self.V, "W": self.W}
        return {"variance": self.variance, "power": self.power, "intermediates": inter}


def power(variance: float, inmb: float, alpha: float) -> float:
    """Normal-approximation power for a two-sided test of the INMB."""
    if not variance > 0 or not math.isfinite(variance):
        raise InvalidInputError("variance must be positive and finite")
    if not 0 < alpha < 1:
        raise InvalidInputError("alpha must lie strictly between 0 and 1")
    return kernels.power_from_variance(variance, inmb, float(ndtri(1.0 - alpha / 2.0)))


def _require_valid(rho: IccVector, J: int, K: int) -> None:
    violations = validate_ordering(rho)
    if violations:
        raise IccConstraintError(violations)
    if not is_positive_definite(rho, J, K):
        raise NotPositiveDefiniteError(
            f"correlation matrix is not positive definite at J={J}, K={K}")


def _report_from_theorem2(I: float, J: float, K: float, consts: DesignConstants,
                          rho: IccVector, econ: EconModel) -> VarianceReport:
    out = kernels.theorem2_report(float(I), float(J), float(K),
                                  consts.U, consts.V, consts.W,
                                  *rho.as_tuple(),
                                  econ.sigma_e, econ.sigma_c, econ.ceiling_ratio)
    variance, ke, kc, kec, delta, dstar, phi, eta = out
    if math.isnan(variance):
        raise UnidentifiableDesignError(
            f"design is unidentifiable (eta={eta}); no treatment contrast")
    return VarianceReport(
        variance=variance,
        power=kernels.power_from_variance(variance, econ.inmb, econ.z_crit),
        kappa_e=ke, kappa_c=kc, kappa_ec=kec,
        U=consts.U, V=consts.V, W=consts.W,
        delta=delta, delta_star=dstar, phi=phi, eta=eta)


def variance_general(layout: TrialLayout, I: int, K: int, rho: IccVector,
                     econ: EconModel) -> VarianceReport:
    """General closed-form variance for a complete layout."""
    if layout.family is DesignFamily.SW_INCOMPLETE:
        raise InvalidInputError("incomplete layouts require the GLS route (variance_gls)")
    _require_valid(rho, layout.periods, K)
    schedule = build_schedule(layout, I)
    consts = design_constants(schedule.treatment)
    return _report_from_theorem2(I, layout.periods, K, consts, rho, econ)


def variance_crxo(J: int, I: int, K: int, pi: float, rho: IccVector,
                  econ: EconModel) -> VarianceReport:
    """Exact crossover variance."""
    if J % 2 != 0:
        raise InvalidInputError("crossover layouts need an even number of periods")
    _require_valid(rho, J, K)
    value = kernels.crxo_variance(float(I), float(J), float(K), float(pi),
                                  *rho.as_tuple(),
                                  econ.sigma_e, econ.sigma_c, econ.ceiling_ratio)
    if math.isnan(value):
        raise UnidentifiableDesignError("crossover variance is not positive")
    from .designs import crxo_constants

    consts = crxo_constants(I, J, pi)
    report = _report_from_theorem2(I, J, K, consts, rho, econ)
    return VarianceReport(value, kernels.power_from_variance(value, econ.inmb, econ.z_crit),
                          report.kappa_e, report.kappa_c, report.kappa_ec,
                          consts.U, consts.V, consts.W,
                          report.delta, report.delta_star, report.phi, report.eta)


def variance_pa(J: int, I: int, K: int, pi: float, rho: IccVector,
                econ: EconModel) -> VarianceReport:
    """Exact parallel-arm variance."""
    _require_valid(rho, J, K)
    value = kernels.pa_variance(float(I), float(J), float(K), float(pi),
                                *rho.as_tuple(),
                                econ.sigma_e, econ.sigma_c, econ.ceiling_ratio)
    if math.isnan(value):
        raise UnidentifiableDesignError("parallel-arm variance is not positive")
    from .designs import pa_constants

    consts = pa_constants(I, J, pi)
    report = _report_from_theorem2(I, J, K, consts, rho, econ)
    return VarianceReport(value, kernels.power_from_variance(value, econ.inmb, econ.z_crit),
                          report.kappa_e, report.kappa_c, report.kappa_ec,
                          consts.U, consts.V, consts.W,
                          report.delta, report.delta_star, report.phi, report.eta)


def _interleave_rows(period_idx: np.ndarray) -> np.ndarray:
    rows = np.empty(2 * period_idx.size, dtype=np.intp)
    rows[0::2] = 2 * period_idx
    rows[1::2] = 2 * period_idx + 1
    return rows


def gls_information(schedule: Schedule, K: float, rho: IccVector,
                    econ: EconModel) -> np.ndarray:
    """Accumulated GLS information matrix for the period and treatment
    fixed effects, built from cluster-period means."""
    treatment = np.asarray(schedule.treatment)
    observed = np.asarray(schedule.observed, dtype=bool)
    I, J = treatment.shape
    sigma_b, sigma_s, sigma_eps = icc_to_covariance(rho, econ.sigma_e, econ.sigma_c)
    g_full = np.kron(np.eye(J), sigma_s + sigma_eps / K) + np.kron(np.ones((J, J)), sigma_b)

    info = np.zeros((2 * J + 2, 2 * J + 2))
    groups: dict[tuple[bytes, bytes], int] = {}
    for i in range(I):
        key = (treatment[i].tobytes(), observed[i].tobytes())
        groups[key] = groups.get(key, 0) + 1
    for (z_bytes, obs_bytes), count in groups.items():
        z = np.frombuffer(z_bytes, dtype=treatment.dtype).astype(float)
        obs = np.frombuffer(obs_bytes, dtype=bool)
        idx = np.flatnonzero(obs)
        if idx.size == 0:
            continue
        rows = _interleave_rows(idx)
        design = np.kron(np.hstack([np.eye(J), z[:, None]]), np.eye(2))[rows, :]
        g_obs = g_full[np.ix_(rows, rows)]
        try:
            factor = cho_factor(g_obs, lower=True)
        except LinAlgError as exc:
            raise NotPositiveDefiniteError(
                "cluster-period-mean covariance is not positive definite") from exc
        info += count * (design.T @ cho_solve(factor, design))
    return info


def variance_gls(source: Schedule | TrialLayout, I: int | None, K: int,
                 rho: IccVector, econ: EconModel) -> VarianceReport:
    """GLS variance from the information matrix; the independent route
    for complete designs and the only route for incomplete ones."""
    if isinstance(source, TrialLayout):
        if I is None:
            raise InvalidInputError("cluster count required with a layout input")
        schedule = build_schedule(source, I)
    else:
        schedule = source
    J = schedule.treatment.shape[1]
    _require_valid(rho, J, int(math.ceil(K)))

    info = gls_information(schedule, K, rho, econ)
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise UnidentifiableDesignError("information matrix is singular") from exc
    residual = np.abs(info @ cov - np.eye(info.shape[0])).max()
    if not np.isfinite(residual) or residual > 1e-6:
        raise UnidentifiableDesignError(
            f"information matrix is numerically singular (residual {residual:.2e})")
    block = cov[-2:, -2:]
    lam = econ.ceiling_ratio
    value = float(lam * lam * block[0, 0] + block[1, 1] - 2.0 * lam * block[0, 1])
    if not value > 0 or not math.isfinite(value):
        raise UnidentifiableDesignError("INMB variance is not positive")

    treated_observed = np.asarray(schedule.treatment) * np.asarray(schedule.observed)
    consts = design_constants(treated_observed)
    ke, kc, kec = kernels.kappas(*rho.as_tuple(), float(K))
    return VarianceReport(value, kernels.power_from_variance(value, econ.inmb, econ.z_crit),
                          ke, kc, kec, consts.U, consts.V, consts.W,
                          extras={"covAlphaGamma": block.tolist()})


# -- Vectorized grid evaluation (used by the design searches) ----------------

def theorem2_variance_grid(I, J, K, U, V, W, rho: IccVector, econ: EconModel) -> np.ndarray:
    """Broadcasting variant of the general variance; invalid entries are NaN."""
    I, K, U, V, W = np.broadcast_arrays(
        np.asarray(I, dtype=float), np.asarray(K, dtype=float),
        np.asarray(U, dtype=float), np.asarray(V, dtype=float),
        np.asarray(W, dtype=float))
    r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec = rho.as_tuple()
    se, sc, lam = econ.sigma_e, econ.sigma_c, econ.ceiling_ratio
    ke = 1.0 + (K - 1.0) * r0e - K * r1e
    kc = 1.0 + (K - 1.0) * r0c - K * r1c
    kec = r2ec + (K - 1.0) * r0ec - K * r1ec
    s2 = (se * sc) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = s2 * (ke * kc - kec * kec) / (K * K)
        dstar = delta + J * s2 * ((ke * r1c + kc * r1e - 2.0 * kec * r1ec) / K
                                  + J * (r1e * r1c - r1ec * r1ec))
        iu_w = I * U - W
        u2_iv = U * U - I * V
        phi = J * iu_w / delta + u2_iv * (1.0 / delta - 1.0 / dstar)
        eta = phi * J * iu_w + (J * J / dstar) * u2_iv * s2 \
            * (r1e * r1c - r1ec * r1ec) * (phi + u2_iv / dstar)
        quad_kappa = lam * lam * ke * se / sc - 2.0 * lam * kec + kc * sc / se
        quad_rho1 = lam * lam * r1e * se / sc - 2.0 * lam * r1ec + r1c * sc / se
        variance = I * J * se * sc / eta * (phi / K * quad_kappa - J / dstar * u2_iv * quad_rho1)
        variance = np.where((eta > 0) & (variance > 0), variance, np.nan)
    return variance


def eigen_min_grid(rho: IccVector, J, K) -> np.ndarray:
    """Broadcasting smallest-eigenvalue evaluation (multiplicity-aware)."""
    J = np.asarray(J, dtype=float)
    K = np.asarray(K, dtype=float)
    r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec = rho.as_tuple()
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
