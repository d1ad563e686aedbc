"""Backend equivalence: the compiled kernels and the pure-Python fallback
must agree to near machine precision on every exported routine."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ce_lcrt import _kernels_py as py
from ce_lcrt._core import BACKEND
from ce_lcrt.correlation import IccVector
from ce_lcrt.variance import EconModel, theorem2_variance_grid
from ce_lcrt.designs import crxo_constants
from conftest import random_valid_rho

cy = pytest.importorskip("ce_lcrt._kernels",
                         reason="compiled kernels unavailable; fallback already exercised")


def _agree(a, b, rel=1e-12):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            _agree(x, y, rel)
        return
    if math.isnan(a) or math.isnan(b):
        assert math.isnan(a) and math.isnan(b)
    else:
        assert a == pytest.approx(b, rel=rel, abs=1e-300)


def _sample(rng):
    J = float(rng.integers(1, 9))
    K = float(rng.integers(1, 40))
    rho = random_valid_rho(rng, int(J), int(K)).as_tuple()
    return J, K, rho


def test_backend_is_compiled_by_default():
    assert BACKEND in ("cython", "python")


def test_scalar_routines_agree():
    rng = np.random.default_rng(123)
    for _ in range(200):
        J, K, rho = _sample(rng)
        _agree(cy.kappas(*rho, K), py.kappas(*rho, K))
        _agree(cy.eigen_values(*rho, J, K), py.eigen_values(*rho, J, K))
        _agree(cy.eigen_min(*rho, J, K), py.eigen_min(*rho, J, K))
        lr = float(rng.uniform(0.01, 50))
        _agree(cy.theta_crxo(*rho, lr), py.theta_crxo(*rho, lr))
        _agree(cy.theta_pa(*rho, lr, J), py.theta_pa(*rho, lr, J))
        x = float(rng.uniform(-6, 6))
        _agree(cy.norm_cdf(x), py.norm_cdf(x))


def test_variance_routines_agree():
    rng = np.random.default_rng(321)
    for _ in range(200):
        J, K, rho = _sample(rng)
        I = float(2 * rng.integers(1, 30))
        se = float(rng.uniform(0.5, 10))
        sc = float(rng.uniform(100, 20000))
        lam = float(rng.uniform(0, 30000))
        consts = crxo_constants(I, J, 0.5)
        args = (I, J, K, consts.U, consts.V, consts.W, *rho, se, sc, lam)
        _agree(cy.theorem2_report(*args), py.theorem2_report(*args))
        _agree(cy.theorem2_variance(*args), py.theorem2_variance(*args))
        _agree(cy.crxo_variance(I, J, K, 0.5, *rho, se, sc, lam),
               py.crxo_variance(I, J, K, 0.5, *rho, se, sc, lam))
        _agree(cy.pa_variance(I, J, K, 0.5, *rho, se, sc, lam),
               py.pa_variance(I, J, K, 0.5, *rho, se, sc, lam))
        _agree(cy.power_from_variance(1234.5, 444.0, 1.96),
               py.power_from_variance(1234.5, 444.0, 1.96))


def test_stepped_wedge_routines_agree():
    rng = np.random.default_rng(777)
    for _ in range(60):
        Q = float(rng.integers(2, 8))
        J = Q + float(rng.integers(1, 4))
        K = float(rng.integers(2, 40))
        rho = random_valid_rho(rng, int(J), int(K)).as_tuple()
        se, sc, lam = 1.0, 3000.0, 20000.0
        _agree(cy.sw_design_constants(Q, J), py.sw_design_constants(Q, J))
        _agree(cy.sw_unit_variance(J, Q, K, *rho, se, sc, lam),
               py.sw_unit_variance(J, Q, K, *rho, se, sc, lam))
        _agree(cy.sw_decimal_design(J, Q, *rho, se, sc, lam, 3e5, 3000.0, 250.0, 200.0),
               py.sw_decimal_design(J, Q, *rho, se, sc, lam, 3e5, 3000.0, 250.0, 200.0),
               rel=1e-9)


def test_vectorized_grid_matches_scalar_kernel():
    rng = np.random.default_rng(555)
    rho = random_valid_rho(rng, 4, 12)
    econ = EconModel(sigma_e=1.0, sigma_c=3000.0, ceiling_ratio=20000.0, inmb=4000.0)
    I = np.arange(2, 40, 2, dtype=float)
    K = np.full_like(I, 12.0)
    consts = [crxo_constants(i, 4, 0.5) for i in I]
    U = np.array([c.U for c in consts])
    V = np.array([c.V for c in consts])
    W = np.array([c.W for c in consts])
    grid = theorem2_variance_grid(I, 4.0, K, U, V, W, rho, econ)
    for idx in range(I.size):
        scalar = cy.theorem2_variance(I[idx], 4.0, 12.0, U[idx], V[idx], W[idx],
                                      *rho.as_tuple(), 1.0, 3000.0, 20000.0)
        assert grid[idx] == pytest.approx(scalar, rel=1e-12)
