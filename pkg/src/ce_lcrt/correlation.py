"""Bivariate intracluster correlation structure for effect and cost outcomes.

Seven ICCs parameterize a nested-exchangeable correlation model over
clusters, periods, and individuals, jointly for a clinical (effect)
outcome and a cost outcome. This module owns their ordering constraints,
the closed-form eigenvalues of the within-cluster correlation matrix,
positive-definiteness certification, and the mapping between ICCs and
random-effect covariance components.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from ._core import kernels

# An eigenvalue counts as strictly positive only above this tolerance,
# guarding optimizer boundary probes against floating-point sign flips.
PD_STRICTNESS_TOL = 1e-10

# Dense assembly is for oracle/test use; cap the matrix order.
MAX_DENSE_ORDER = 4096

ICC_FIELDS = ("rho0E", "rho1E", "rho0C", "rho1C", "rho0EC", "rho1EC", "rho2EC")


@dataclass(frozen=True)
class IccVector:
    """The seven intracluster correlation coefficients.

    rho0E/rho0C: within-period effect/cost ICC, in [0, 1).
    rho1E/rho1C: between-period effect/cost ICC, in [0, 1).
    rho0EC/rho1EC/rho2EC: within-period, between-period, and
        within-individual effect-cost ICCs, in (-1, 1).
    """

    rho0E: float
    rho1E: float
    rho0C: float
    rho1C: float
    rho0EC: float
    rho1EC: float
    rho2EC: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.rho0E, self.rho1E, self.rho0C, self.rho1C,
                self.rho0EC, self.rho1EC, self.rho2EC)

    def to_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "IccVector":
        missing = [name for name in ICC_FIELDS if name not in data]
        if missing:
            raise ValueError(f"missing ICC fields: {missing}")
        return cls(**{name: float(data[name]) for name in ICC_FIELDS})

    @property
    def cac_effect(self) -> float:
        """Cluster autocorrelation for the effect outcome, rho1E/rho0E."""
        if self.rho0E == 0.0:
            raise ZeroDivisionError("effect CAC undefined: rho0E is zero")
        return self.rho1E / self.rho0E

    @property
    def cac_cost(self) -> float:
        """Cluster autocorrelation for the cost outcome, rho1C/rho0C."""
        if self.rho0C == 0.0:
            raise ZeroDivisionError("cost CAC undefined: rho0C is zero")
        return self.rho1C / self.rho0C

    @property
    def cac_effect_cost(self) -> float:
        """Cluster autocorrelation for the effect-cost ICCs, rho1EC/rho0EC."""
        if self.rho0EC == 0.0:
            raise ZeroDivisionError("effect-cost CAC undefined: rho0EC is zero")
        return self.rho1EC / self.rho0EC


@dataclass(frozen=True)
class IccBox:
    """Element-wise lower/upper bounds on an IccVector."""

    rho_min: IccVector
    rho_max: IccVector

    def __post_init__(self) -> None:
        for name in ICC_FIELDS:
            lo, hi = getattr(self.rho_min, name), getattr(self.rho_max, name)
            if lo > hi:
                raise ValueError(f"box bound reversed for {name}: {lo} > {hi}")

    def to_dict(self) -> dict:
        return {"min": self.rho_min.to_dict(), "max": self.rho_max.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "IccBox":
        return cls(IccVector.from_dict(data["min"]), IccVector.from_dict(data["max"]))

    def is_degenerate(self) -> bool:
        return self.rho_min.as_tuple() == self.rho_max.as_tuple()

    def widths(self) -> tuple[float, ...]:
        return tuple(getattr(self.rho_max, n) - getattr(self.rho_min, n) for n in ICC_FIELDS)

    def clip(self, values: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.rho_min.as_tuple())
        hi = np.asarray(self.rho_max.as_tuple())
        return np.clip(values, lo, hi)

    def contains(self, rho: IccVector, tol: float = 1e-12) -> bool:
        lo = np.asarray(self.rho_min.as_tuple())
        hi = np.asarray(self.rho_max.as_tuple())
        x = np.asarray(rho.as_tuple())
        return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))


@dataclass(frozen=True)
class KappaTriple:
    """Cluster-period-level eigenvalue combinations entering the variance."""

    kappa_e: float
    kappa_c: float
    kappa_ec: float


@dataclass(frozen=True)
class EigenSpectrum:
    """The six closed-form eigenvalues of the within-cluster correlation matrix.

    Multiplicities: lambda1 pair 1 each, lambda2 pair J-1 each,
    lambda3 pair J(K-1) each; zero-multiplicity pairs are not part of
    the spectrum (J=1 or K=1 collapse cases).
    """

    lambda1_plus: float
    lambda1_minus: float
    lambda2_plus: float
    lambda2_minus: float
    lambda3_plus: float
    lambda3_minus: float
    periods: int
    cluster_period_size: int

    def multiplicities(self) -> tuple[int, int, int, int, int, int]:
        j, k = self.periods, self.cluster_period_size
        return (1, 1, j - 1, j - 1, j * (k - 1), j * (k - 1))

    def values_with_multiplicity(self) -> Iterator[tuple[float, int]]:
        vals = (self.lambda1_plus, self.lambda1_minus, self.lambda2_plus,
                self.lambda2_minus, self.lambda3_plus, self.lambda3_minus)
        for value, mult in zip(vals, self.multiplicities()):
            if mult > 0:
                yield value, mult

    def min_eigenvalue(self) -> float:
        return min(value for value, _ in self.values_with_multiplicity())

    def to_dict(self) -> dict[str, float]:
        return {
            "lambda1Plus": self.lambda1_plus, "lambda1Minus": self.lambda1_minus,
            "lambda2Plus": self.lambda2_plus, "lambda2Minus": self.lambda2_minus,
            "lambda3Plus": self.lambda3_plus, "lambda3Minus": self.lambda3_minus,
        }


def validate_ordering(rho: IccVector) -> list[str]:
    """Check range bounds and the five ordering constraints.

    Returns a list of violation descriptions; an empty list means the
    vector is admissible (which does not by itself imply the correlation
    matrix is positive definite).
    """
    v: list[str] = []
    for name in ("rho0E", "rho1E", "rho0C", "rho1C"):
        x = getattr(rho, name)
        if not np.isfinite(x) or not (0.0 <= x < 1.0):
            v.append(f"range: {name} must lie in [0, 1), got {x}")
    for name in ("rho0EC", "rho1EC", "rho2EC"):
        x = getattr(rho, name)
        if not np.isfinite(x) or not (-1.0 < x < 1.0):
            v.append(f"range: {name} must lie in (-1, 1), got {x}")
    if v:
        return v
    if rho.rho1E > rho.rho0E:
        v.append("(i): rho1E exceeds rho0E")
    if rho.rho1C > rho.rho0C:
        v.append("(ii): rho1C exceeds rho0C")
    if rho.rho0EC > min(rho.rho0E, rho.rho0C):
        v.append("(iii): rho0EC exceeds min(rho0E, rho0C)")
    if rho.rho1EC > min(rho.rho1E, rho.rho1C):
        v.append("(iv): rho1EC exceeds min(rho1E, rho1C)")
    if not (rho.rho1EC <= rho.rho0EC <= rho.rho2EC):
        v.append("(v): rho1EC <= rho0EC <= rho2EC violated")
    return v


def kappa_triple(rho: IccVector, K: float) -> KappaTriple:
    ke, kc, kec = kernels.kappas(*rho.as_tuple(), K)
    return KappaTriple(ke, kc, kec)


def eigen_spectrum(rho: IccVector, J: int, K: int) -> EigenSpectrum:
    """Closed-form eigenvalues of the 2JK x 2JK within-cluster correlation matrix."""
    if J < 1 or K < 1:
        raise ValueError("J and K must be at least 1")
    vals = kernels.eigen_values(*rho.as_tuple(), float(J), float(K))
    return EigenSpectrum(*vals, periods=J, cluster_period_size=K)


def min_eigenvalue(rho: IccVector, J: int, K: int) -> float:
    return kernels.eigen_min(*rho.as_tuple(), float(J), float(K))


def is_positive_definite(rho: IccVector, J: int, K: int, tol: float = PD_STRICTNESS_TOL) -> bool:
    """True iff every eigenvalue of the correlation matrix exceeds tol."""
    if J < 1 or K < 1:
        raise ValueError("J and K must be at least 1")
    return kernels.eigen_min(*rho.as_tuple(), float(J), float(K)) > tol


def gamma_matrices(rho: IccVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The within-period, between-period, and within-individual 2x2 ICC blocks."""
    g0 = np.array([[rho.rho0E, rho.rho0EC], [rho.rho0EC, rho.rho0C]])
    g1 = np.array([[rho.rho1E, rho.rho1EC], [rho.rho1EC, rho.rho1C]])
    g2 = np.array([[1.0, rho.rho2EC], [rho.rho2EC, 1.0]])
    return g0, g1, g2


def assemble_correlation(rho: IccVector, J: int, K: int) -> np.ndarray:
    """Dense 2JK x 2JK correlation matrix, for test/oracle use."""
    if 2 * J * K > MAX_DENSE_ORDER:
        raise ValueError(f"dense assembly capped at order {MAX_DENSE_ORDER}, got {2 * J * K}")
    g0, g1, g2 = gamma_matrices(rho)
    eye_j, eye_k = np.eye(J), np.eye(K)
    ones_j = np.ones((J, J))
    ones_k = np.ones((K, K))
    within_period = np.kron(eye_k, g2) + np.kron(ones_k - eye_k, g0)
    between_period = np.kron(ones_k, g1)
    return np.kron(eye_j, within_period) + np.kron(ones_j - eye_j, between_period)


def icc_to_covariance(rho: IccVector, sigma_e: float, sigma_c: float
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random-effect covariance components (cluster, cluster-period, individual).

    The three 2x2 matrices sum to the total outcome covariance:
    diag(sigma_e^2, sigma_c^2) with off-diagonal rho2EC*sigma_e*sigma_c.
    """
    if sigma_e <= 0 or sigma_c <= 0:
        raise ValueError("sigma_e and sigma_c must be positive")
    g0, g1, g2 = gamma_matrices(rho)
    scale = np.diag([sigma_e, sigma_c])
    sigma_b = scale @ g1 @ scale
    sigma_s = scale @ (g0 - g1) @ scale
    sigma_eps = scale @ (g2 - g0) @ scale
    return sigma_b, sigma_s, sigma_eps


def covariance_to_icc(sigma_b: np.ndarray, sigma_s: np.ndarray, sigma_eps: np.ndarray
                      ) -> tuple[IccVector, float, float]:
    """Invert icc_to_covariance; returns (rho, sigma_e, sigma_c)."""
    total = sigma_b + sigma_s + sigma_eps
    sigma_e = float(np.sqrt(total[0, 0]))
    sigma_c = float(np.sqrt(total[1, 1]))
    prod = sigma_e * sigma_c
    return IccVector(
        rho0E=float((sigma_b[0, 0] + sigma_s[0, 0]) / total[0, 0]),
        rho1E=float(sigma_b[0, 0] / total[0, 0]),
        rho0C=float((sigma_b[1, 1] + sigma_s[1, 1]) / total[1, 1]),
        rho1C=float(sigma_b[1, 1] / total[1, 1]),
        rho0EC=float((sigma_b[0, 1] + sigma_s[0, 1]) / prod),
        rho1EC=float(sigma_b[0, 1] / prod),
        rho2EC=float(total[0, 1] / prod),
    ), sigma_e, sigma_c
