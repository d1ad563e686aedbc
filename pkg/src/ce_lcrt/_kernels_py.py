"""Pure-Python numeric kernels (fallback backend).

Scalar hot-path routines mirrored by the compiled ce_lcrt._kernels
extension: correlation eigenvalues, the general INMB variance, the
crossover/parallel-arm specializations, the theta ratios behind the
closed-form decimal designs, and the stepped-wedge decimal-design
line search. Invalid inputs are signalled with NaN; wrapping modules
translate that into exceptions.

ICC arguments always appear in the order
(rho0E, rho1E, rho0C, rho1C, rho0EC, rho1EC, rho2EC).
"""

from __future__ import annotations

import math

NAN = float("nan")

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def norm_cdf(x: float) -> float:
    """Standard normal CDF via erfc; double-precision accurate."""
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def power_from_variance(variance: float, inmb: float, z_crit: float) -> float:
    """Two-sided normal-approximation power for detecting |inmb|."""
    if not variance > 0.0 or not math.isfinite(variance):
        return NAN
    return norm_cdf(abs(inmb) / math.sqrt(variance) - z_crit)


def kappas(r0e: float, r1e: float, r0c: float, r1c: float,
           r0ec: float, r1ec: float, r2ec: float, k: float
           ) -> tuple[float, float, float]:
    ke = 1.0 + (k - 1.0) * r0e - k * r1e
    kc = 1.0 + (k - 1.0) * r0c - k * r1c
    kec = r2ec + (k - 1.0) * r0ec - k * r1ec
    return ke, kc, kec


def eigen_values(r0e: float, r1e: float, r0c: float, r1c: float,
                 r0ec: float, r1ec: float, r2ec: float,
                 j: float, k: float) -> tuple[float, float, float, float, float, float]:
    """The six closed-form eigenvalues (plus/minus per level)."""
    ke, kc, kec = kappas(r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec, k)

    m1 = 0.5 * (2.0 + (k - 1.0) * (r0e + r0c) + (j - 1.0) * k * (r1e + r1c))
    xi1 = ((k - 1.0) * (r0e - r0c) + (j - 1.0) * k * (r1e - r1c)) ** 2 \
        + 4.0 * (r2ec + (k - 1.0) * r0ec + (j - 1.0) * k * r1ec) ** 2
    s1 = 0.5 * math.sqrt(xi1)

    m2 = 0.5 * (ke + kc)
    s2 = 0.5 * math.sqrt((ke - kc) ** 2 + 4.0 * kec * kec)

    m3 = 0.5 * (2.0 - r0e - r0c)
    s3 = 0.5 * math.sqrt((r0e - r0c) ** 2 + 4.0 * (r2ec - r0ec) ** 2)

    return (m1 + s1, m1 - s1, m2 + s2, m2 - s2, m3 + s3, m3 - s3)


def eigen_min(r0e: float, r1e: float, r0c: float, r1c: float,
              r0ec: float, r1ec: float, r2ec: float,
              j: float, k: float) -> float:
    """Smallest eigenvalue among those with positive multiplicity."""
    vals = eigen_values(r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec, j, k)
    smallest = vals[1]
    if j > 1.0 and vals[3] < smallest:
        smallest = vals[3]
    if k > 1.0 and vals[5] < smallest:
        smallest = vals[5]
    return smallest


def theorem2_report(i: float, j: float, k: float, u: float, v: float, w: float,
                    r0e: float, r1e: float, r0c: float, r1c: float,
                    r0ec: float, r1ec: float, r2ec: float,
                    sigma_e: float, sigma_c: float, ceiling: float
                    ) -> tuple[float, float, float, float, float, float, float, float]:
    """General INMB variance with intermediates.

    Returns (variance, kappaE, kappaC, kappaEC, Delta, DeltaStar, phi, eta);
    variance is NaN when eta <= 0 or the result is not a positive finite
    number (unidentifiable design).
    """
    ke, kc, kec = kappas(r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec, k)
    s2 = (sigma_e * sigma_c) ** 2
    delta = s2 * (ke * kc - kec * kec) / (k * k)
    dstar = delta + j * s2 * ((ke * r1c + kc * r1e - 2.0 * kec * r1ec) / k
                              + j * (r1e * r1c - r1ec * r1ec))
    if delta == 0.0 or dstar == 0.0:
        return (NAN, ke, kc, kec, delta, dstar, NAN, NAN)
    iu_w = i * u - w
    u2_iv = u * u - i * v
    phi = j * iu_w / delta + u2_iv * (1.0 / delta - 1.0 / dstar)
    eta = phi * j * iu_w + (j * j / dstar) * u2_iv * s2 \
        * (r1e * r1c - r1ec * r1ec) * (phi + u2_iv / dstar)
    if not (eta > 0.0 and math.isfinite(eta)):
        return (NAN, ke, kc, kec, delta, dstar, phi, eta)
    quad_kappa = ceiling * ceiling * ke * sigma_e / sigma_c - 2.0 * ceiling * kec \
        + kc * sigma_c / sigma_e
    quad_rho1 = ceiling * ceiling * r1e * sigma_e / sigma_c - 2.0 * ceiling * r1ec \
        + r1c * sigma_c / sigma_e
    variance = i * j * sigma_e * sigma_c / eta \
        * (phi / k * quad_kappa - j / dstar * u2_iv * quad_rho1)
    if not (variance > 0.0 and math.isfinite(variance)):
        variance = NAN
    return (variance, ke, kc, kec, delta, dstar, phi, eta)


def theorem2_variance(i: float, j: float, k: float, u: float, v: float, w: float,
                      r0e: float, r1e: float, r0c: float, r1c: float,
                      r0ec: float, r1ec: float, r2ec: float,
                      sigma_e: float, sigma_c: float, ceiling: float) -> float:
    return theorem2_report(i, j, k, u, v, w, r0e, r1e, r0c, r1c,
                           r0ec, r1ec, r2ec, sigma_e, sigma_c, ceiling)[0]


def crxo_variance(i: float, j: float, k: float, pi: float,
                  r0e: float, r1e: float, r0c: float, r1c: float,
                  r0ec: float, r1ec: float, r2ec: float,
                  sigma_e: float, sigma_c: float, ceiling: float) -> float:
    """Crossover specialization of the general variance."""
    ke, kc, kec = kappas(r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec, k)
    num = kc * sigma_c * sigma_c - 2.0 * ceiling * kec * sigma_c * sigma_e \
        + ceiling * ceiling * ke * sigma_e * sigma_e
    variance = num / (i * j * k * pi * (1.0 - pi))
    return variance if variance > 0.0 and math.isfinite(variance) else NAN


def pa_variance(i: float, j: float, k: float, pi: float,
                r0e: float, r1e: float, r0c: float, r1c: float,
                r0ec: float, r1ec: float, r2ec: float,
                sigma_e: float, sigma_c: float, ceiling: float) -> float:
    """Parallel-arm specialization: crossover-like term plus a
    between-period term that does not shrink with K."""
    ke, kc, kec = kappas(r0e, r1e, r0c, r1c, r0ec, r1ec, r2ec, k)
    num1 = kc * sigma_c * sigma_c - 2.0 * ceiling * kec * sigma_c * sigma_e \
        + ceiling * ceiling * ke * sigma_e * sigma_e
    num2 = r1c * sigma_c * sigma_c - 2.0 * ceiling * r1ec * sigma_c * sigma_e \
        + ceiling * ceiling * r1e * sigma_e * sigma_e
    variance = num1 / (i * j * k * pi * (1.0 - pi)) + num2 / (i * pi * (1.0 - pi))
    return variance if variance > 0.0 and math.isfinite(variance) else NAN


def theta_crxo(r0e: float, r1e: float, r0c: float, r1c: float,
               r0ec: float, r1ec: float, r2ec: float, lambda_r: float) -> float:
    """Cost-aware cluster-vs-individual tradeoff ratio for crossover designs.

    NaN when the denominator vanishes (degenerate configuration).
    """
    if math.isinf(lambda_r):
        num = 1.0 - r1e
        den = r0e - r1e
    elif lambda_r > 1.0:
        inv = 1.0 / lambda_r
        num = (1.0 - r1e) + 2.0 * (r1ec - r2ec) * inv + (1.0 - r1c) * inv * inv
        den = (r0e - r1e) + 2.0 * (r1ec - r0ec) * inv + (r0c - r1c) * inv * inv
    else:
        x = lambda_r
        num = (1.0 - r1e) * x * x + 2.0 * (r1ec - r2ec) * x + (1.0 - r1c)
        den = (r0e - r1e) * x * x + 2.0 * (r1ec - r0ec) * x + (r0c - r1c)
    if den == 0.0:
        return NAN
    return num / den - 1.0


def theta_pa(r0e: float, r1e: float, r0c: float, r1c: float,
             r0ec: float, r1ec: float, r2ec: float,
             lambda_r: float, j: float) -> float:
    """Parallel-arm counterpart of theta_crxo; depends on the period count."""
    ne = 1.0 + (j - 1.0) * r1e
    nc = 1.0 + (j - 1.0) * r1c
    nec = (1.0 - j) * r1ec - r2ec
    de = r0e + (j - 1.0) * r1e
    dc = r0c + (j - 1.0) * r1c
    dec = (1.0 - j) * r1ec - r0ec
    if math.isinf(lambda_r):
        num, den = ne, de
    elif lambda_r > 1.0:
        inv = 1.0 / lambda_r
        num = ne + 2.0 * nec * inv + nc * inv * inv
        den = de + 2.0 * dec * inv + dc * inv * inv
    else:
        x = lambda_r
        num = ne * x * x + 2.0 * nec * x + nc
        den = de * x * x + 2.0 * dec * x + dc
    if den == 0.0:
        return NAN
    return num / den - 1.0


def sw_design_constants(q: float, j: float) -> tuple[float, float, float]:
    """Per-cluster normalized design constants (U/I, V/I, W/I^2) for a
    complete stepped wedge with equal sequence allocation."""
    qi = int(q)
    ji = int(j)
    u = j - (q + 1.0) / 2.0
    v = sum((j - step) ** 2 for step in range(1, qi + 1)) / q
    w = sum(float(min(p - 1, qi)) ** 2 for p in range(1, ji + 1)) / (q * q)
    return u, v, w


def sw_unit_variance(j: float, q: float, k: float,
                     r0e: float, r1e: float, r0c: float, r1c: float,
                     r0ec: float, r1ec: float, r2ec: float,
                     sigma_e: float, sigma_c: float, ceiling: float) -> float:
    """Stepped-wedge variance normalized to one cluster (variance at I
    clusters is this value divided by I)."""
    u, v, w = sw_design_constants(q, j)
    return theorem2_variance(1.0, j, k, u, v, w, r0e, r1e, r0c, r1c,
                             r0ec, r1ec, r2ec, sigma_e, sigma_c, ceiling)


def sw_decimal_design(j: float, q: float,
                      r0e: float, r1e: float, r0c: float, r1c: float,
                      r0ec: float, r1ec: float, r2ec: float,
                      sigma_e: float, sigma_c: float, ceiling: float,
                      budget: float, c1: float, c2: float, k_max: float
                      ) -> tuple[float, float, float]:
    """Continuous-relaxation optimum for a complete stepped wedge.

    Minimizes the variance over continuous K in [2, k_max] with the
    cluster count taking its budget-exhausting continuous value, by
    golden-section search to |dK| < 1e-6. Returns (I, K, variance).
    """

    def objective(k: float) -> float:
        unit = sw_unit_variance(j, q, k, r0e, r1e, r0c, r1c,
                                r0ec, r1ec, r2ec, sigma_e, sigma_c, ceiling)
        return unit * (c1 + c2 * j * k) / budget

    lo, hi = 2.0, float(k_max)
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
    # Guard against a minimum pinned at either endpoint.
    for k_edge in (2.0, float(k_max)):
        f_edge = objective(k_edge)
        if not math.isnan(f_edge) and (math.isnan(f_best) or f_edge < f_best):
            k_best, f_best = k_edge, f_edge
    i_best = budget / (c1 + c2 * j * k_best)
    return i_best, k_best, f_best
