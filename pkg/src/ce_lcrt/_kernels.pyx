# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled numeric kernels (hot paths of the design engine).

Signature-compatible with ce_lcrt._kernels_py; see that module for the
reference semantics. Invalid inputs are signalled with NaN.
"""

from libc.math cimport erfc, fabs, isfinite, isinf, isnan, sqrt, NAN


cdef double INV_SQRT2 = 0.7071067811865475244
cdef double GOLDEN = 0.6180339887498948482


cpdef double norm_cdf(double x):
    return 0.5 * erfc(-x * INV_SQRT2)


cpdef double power_from_variance(double variance, double inmb, double z_crit):
    if not (variance > 0.0) or not isfinite(variance):
        return NAN
    return 0.5 * erfc(-(fabs(inmb) / sqrt(variance) - z_crit) * INV_SQRT2)


cpdef tuple kappas(double r0e, double r1e, double r0c, double r1c,
                   double r0ec, double r1ec, double r2ec, double k):
    return (1.0 + (k - 1.0) * r0e - k * r1e,
            1.0 + (k - 1.0) * r0c - k * r1c,
            r2ec + (k - 1.0) * r0ec - k * r1ec)


cpdef tuple eigen_values(double r0e, double r1e, double r0c, double r1c,
                         double r0ec, double r1ec, double r2ec,
                         double j, double k):
    cdef double ke = 1.0 + (k - 1.0) * r0e - k * r1e
    cdef double kc = 1.0 + (k - 1.0) * r0c - k * r1c
    cdef double kec = r2ec + (k - 1.0) * r0ec - k * r1ec
    cdef double m1 = 0.5 * (2.0 + (k - 1.0) * (r0e + r0c) + (j - 1.0) * k * (r1e + r1c))
    cdef double a = (k - 1.0) * (r0e - r0c) + (j - 1.0) * k * (r1e - r1c)
    cdef double b = r2ec + (k - 1.0) * r0ec + (j - 1.0) * k * r1ec
    cdef double s1 = 0.5 * sqrt(a * a + 4.0 * b * b)
    cdef double m2 = 0.5 * (ke + kc)
    cdef double s2 = 0.5 * sqrt((ke - kc) * (ke - kc) + 4.0 * kec * kec)
    cdef double m3 = 0.5 * (2.0 - r0e - r0c)
    cdef double d3 = r2ec - r0ec
    cdef double s3 = 0.5 * sqrt((r0e - r0c) * (r0e - r0c) + 4.0 * d3 * d3)
    return (m1 + s1, m1 - s1, m2 + s2, m2 - s2, m3 + s3, m3 - s3)


cpdef double eigen_min(double r0e, double r1e, double r0c, double r1c,
                       double r0ec, double r1ec, double r2ec,
                       double j, double k):
    cdef double ke = 1.0 + (k - 1.0) * r0e - k * r1e
    cdef double kc = 1.0 + (k - 1.0) * r0c - k * r1c
    cdef double kec = r2ec + (k - 1.0) * r0ec - k * r1ec
    cdef double m1 = 0.5 * (2.0 + (k - 1.0) * (r0e + r0c) + (j - 1.0) * k * (r1e + r1c))
    cdef double a = (k - 1.0) * (r0e - r0c) + (j - 1.0) * k * (r1e - r1c)
    cdef double b = r2ec + (k - 1.0) * r0ec + (j - 1.0) * k * r1ec
    cdef double smallest = m1 - 0.5 * sqrt(a * a + 4.0 * b * b)
    cdef double cand
    if j > 1.0:
        cand = 0.5 * (ke + kc) - 0.5 * sqrt((ke - kc) * (ke - kc) + 4.0 * kec * kec)
        if cand < smallest:
            smallest = cand
    if k > 1.0:
        a = r0e - r0c
        b = r2ec - r0ec
        cand = 0.5 * (2.0 - r0e - r0c) - 0.5 * sqrt(a * a + 4.0 * b * b)
        if cand < smallest:
            smallest = cand
    return smallest


cpdef tuple theorem2_report(double i, double j, double k,
                            double u, double v, double w,
                            double r0e, double r1e, double r0c, double r1c,
                            double r0ec, double r1ec, double r2ec,
                            double sigma_e, double sigma_c, double ceiling):
    cdef double ke = 1.0 + (k - 1.0) * r0e - k * r1e
    cdef double kc = 1.0 + (k - 1.0) * r0c - k * r1c
    cdef double kec = r2ec + (k - 1.0) * r0ec - k * r1ec
    cdef double s2 = (sigma_e * sigma_c) * (sigma_e * sigma_c)
    cdef double delta = s2 * (ke * kc - kec * kec) / (k * k)
    cdef double dstar = delta + j * s2 * ((ke * r1c + kc * r1e - 2.0 * kec * r1ec) / k
                                          + j * (r1e * r1c - r1ec * r1ec))
    if delta == 0.0 or dstar == 0.0:
        return (NAN, ke, kc, kec, delta, dstar, NAN, NAN)
    cdef double iu_w = i * u - w
    cdef double u2_iv = u * u - i * v
    cdef double phi = j * iu_w / delta + u2_iv * (1.0 / delta - 1.0 / dstar)
    cdef double eta = phi * j * iu_w + (j * j / dstar) * u2_iv * s2 \
        * (r1e * r1c - r1ec * r1ec) * (phi + u2_iv / dstar)
    if not (eta > 0.0 and isfinite(eta)):
        return (NAN, ke, kc, kec, delta, dstar, phi, eta)
    cdef double quad_kappa = ceiling * ceiling * ke * sigma_e / sigma_c \
        - 2.0 * ceiling * kec + kc * sigma_c / sigma_e
    cdef double quad_rho1 = ceiling * ceiling * r1e * sigma_e / sigma_c \
        - 2.0 * ceiling * r1ec + r1c * sigma_c / sigma_e
    cdef double variance = i * j * sigma_e * sigma_c / eta \
        * (phi / k * quad_kappa - j / dstar * u2_iv * quad_rho1)
    if not (variance > 0.0 and isfinite(variance)):
        variance = NAN
    return (variance, ke, kc, kec, delta, dstar, phi, eta)


cdef double _theorem2_value(double i, double j, double k,
                            double u, double v, double w,
                            double r0e, double r1e, double r0c, double r1c,
                            double r0ec, double r1ec, double r2ec,
                            double sigma_e, double sigma_c, double ceiling):
    cdef double ke = 1.0 + (k - 1.0) * r0e - k * r1e
    cdef double kc = 1.0 + (k - 1.0) * r0c - k * r1c
    cdef double kec = r2ec + (k - 1.0) * r0ec - k * r1ec
    cdef double s2 = (sigma_e * sigma_c) * (sigma_e * sigma_c)
    cdef double delta = s2 * (ke * kc - kec * kec) / (k * k)
    cdef double dstar = delta + j * s2 * ((ke * r1c + kc * r1e - 2.0 * kec * r1ec) / k
                                          + j * (r1e * r1c - r1ec * r1ec))
    if delta == 0.0 or dstar == 0.0:
        return NAN
    cdef double iu_w = i * u - w
    cdef double u2_iv = u * u - i * v
    cdef double phi = j * iu_w / delta + u2_iv * (1.0 / delta - 1.0 / dstar)
    cdef double eta = phi * j * iu_w + (j * j / dstar) * u2_iv * s2 \
        * (r1e * r1c - r1ec * r1ec) * (phi + u2_iv / dstar)
    if not (eta > 0.0 and isfinite(eta)):
        return NAN
    cdef double quad_kappa = ceiling * ceiling * ke * sigma_e / sigma_c \
        - 2.0 * ceiling * kec + kc * sigma_c / sigma_e
    cdef double quad_rho1 = ceiling * ceiling * r1e * sigma_e / sigma_c \
        - 2.0 * ceiling * r1ec + r1c * sigma_c / sigma_e
    cdef double variance = i * j * sigma_e * sigma_c / eta \
        * (phi / k * quad_kappa - j / dstar * u2_iv * quad_rho1)
    if not (variance > 0.0 and isfinite(variance)):
        return NAN
    return variance


cpdef double theorem2_variance(double i, double j, double k,
                               double u, double v, double w,
                               double r0e, double r1e, double r0c, double r1c,
                               double r0ec, double r1ec, double r2ec,
                               double sigma_e, double sigma_c, double ceiling):
    return _theorem2_value(i, j, k, u, v, w, r0e, r1e, r0c, r1c,
                           r0ec, r1ec, r2ec, sigma_e, sigma_c, ceiling)


cpdef double crxo_variance(double i, double j, double k, double pi,
                           double r0e, double r1e, double r0c, double r1c,
                           double r0ec, double r1ec, double r2ec,
                           double sigma_e, double sigma_c, double ceiling):
    cdef double ke = 1.0 + (k - 1.0) * r0e - k * r1e
    cdef double kc = 1.0 + (k - 1.0) * r0c - k * r1c
    cdef double kec = r2ec + (k - 1.0) * r0ec - k * r1ec
    cdef double num = kc * sigma_c * sigma_c - 2.0 * ceiling * kec * sigma_c * sigma_e \
        + ceiling * ceiling * ke * sigma_e * sigma_e
    cdef double variance = num / (i * j * k * pi * (1.0 - pi))
    if not (variance > 0.0 and isfinite(variance)):
        return NAN
    return variance


cpdef double pa_variance(double i, double j, double k, double pi,
                         double r0e, double r1e, double r0c, double r1c,
                         double r0ec, double r1ec, double r2ec,
                         double sigma_e, double sigma_c, double ceiling):
    cdef double ke = 1.0 + (k - 1.0) * r0e - k * r1e
    cdef double kc = 1.0 + (k - 1.0) * r0c - k * r1c
    cdef double kec = r2ec + (k - 1.0) * r0ec - k * r1ec
    cdef double num1 = kc * sigma_c * sigma_c - 2.0 * ceiling * kec * sigma_c * sigma_e \
        + ceiling * ceiling * ke * sigma_e * sigma_e
    cdef double num2 = r1c * sigma_c * sigma_c - 2.0 * ceiling * r1ec * sigma_c * sigma_e \
        + ceiling * ceiling * r1e * sigma_e * sigma_e
    cdef double variance = num1 / (i * j * k * pi * (1.0 - pi)) \
        + num2 / (i * pi * (1.0 - pi))
    if not (variance > 0.0 and isfinite(variance)):
        return NAN
    return variance


cpdef double theta_crxo(double r0e, double r1e, double r0c, double r1c,
                        double r0ec, double r1ec, double r2ec, double lambda_r):
    cdef double num, den, inv, x
    if isinf(lambda_r):
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


cpdef double theta_pa(double r0e, double r1e, double r0c, double r1c,
                      double r0ec, double r1ec, double r2ec,
                      double lambda_r, double j):
    cdef double ne = 1.0 + (j - 1.0) * r1e
    cdef double nc = 1.0 + (j - 1.0) * r1c
    cdef double nec = (1.0 - j) * r1ec - r2ec
    cdef double de = r0e + (j - 1.0) * r1e
    cdef double dc = r0c + (j - 1.0) * r1c
    cdef double dec = (1.0 - j) * r1ec - r0ec
    cdef double num, den, inv, x
    if isinf(lambda_r):
        num = ne
        den = de
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


cpdef tuple sw_design_constants(double q, double j):
    cdef int qi = <int> q
    cdef int ji = <int> j
    cdef double u = j - (q + 1.0) / 2.0
    cdef double v = 0.0
    cdef double w = 0.0
    cdef int step, p, treated
    for step in range(1, qi + 1):
        v += (j - step) * (j - step)
    v /= q
    for p in range(1, ji + 1):
        treated = p - 1 if p - 1 < qi else qi
        w += (<double> treated) * (<double> treated)
    w /= q * q
    return (u, v, w)


cpdef double sw_unit_variance(double j, double q, double k,
                              double r0e, double r1e, double r0c, double r1c,
                              double r0ec, double r1ec, double r2ec,
                              double sigma_e, double sigma_c, double ceiling):
    cdef double u, v, w
    u, v, w = sw_design_constants(q, j)
    return _theorem2_value(1.0, j, k, u, v, w, r0e, r1e, r0c, r1c,
                           r0ec, r1ec, r2ec, sigma_e, sigma_c, ceiling)


cpdef tuple sw_decimal_design(double j, double q,
                              double r0e, double r1e, double r0c, double r1c,
                              double r0ec, double r1ec, double r2ec,
                              double sigma_e, double sigma_c, double ceiling,
                              double budget, double c1, double c2, double k_max):
    cdef double u, v, w
    u, v, w = sw_design_constants(q, j)

    cdef double lo = 2.0
    cdef double hi = k_max
    cdef double x1, x2, f1, f2, k_best, f_best, f_edge, k_edge
    cdef int edge

    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1 = _theorem2_value(1.0, j, x1, u, v, w, r0e, r1e, r0c, r1c, r0ec, r1ec,
                         r2ec, sigma_e, sigma_c, ceiling) * (c1 + c2 * j * x1) / budget
    f2 = _theorem2_value(1.0, j, x2, u, v, w, r0e, r1e, r0c, r1c, r0ec, r1ec,
                         r2ec, sigma_e, sigma_c, ceiling) * (c1 + c2 * j * x2) / budget
    while hi - lo > 1e-6:
        if f1 < f2 or isnan(f2):
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = _theorem2_value(1.0, j, x1, u, v, w, r0e, r1e, r0c, r1c, r0ec,
                                 r1ec, r2ec, sigma_e, sigma_c, ceiling) \
                * (c1 + c2 * j * x1) / budget
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = _theorem2_value(1.0, j, x2, u, v, w, r0e, r1e, r0c, r1c, r0ec,
                                 r1ec, r2ec, sigma_e, sigma_c, ceiling) \
                * (c1 + c2 * j * x2) / budget
    k_best = 0.5 * (lo + hi)
    f_best = _theorem2_value(1.0, j, k_best, u, v, w, r0e, r1e, r0c, r1c, r0ec,
                             r1ec, r2ec, sigma_e, sigma_c, ceiling) \
        * (c1 + c2 * j * k_best) / budget
    for edge in range(2):
        k_edge = 2.0 if edge == 0 else k_max
        f_edge = _theorem2_value(1.0, j, k_edge, u, v, w, r0e, r1e, r0c, r1c,
                                 r0ec, r1ec, r2ec, sigma_e, sigma_c, ceiling) \
            * (c1 + c2 * j * k_edge) / budget
        if not isnan(f_edge) and (isnan(f_best) or f_edge < f_best):
            k_best = k_edge
            f_best = f_edge
    return (budget / (c1 + c2 * j * k_best), k_best, f_best)
