import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from evolab import constants as konst
from evolab.errors import DegenerateExponents


def test_super_lsi_m1_saturates_at_eight():
    # p=2, q=3, Lambda=1, r0=-1, large window: 2*1*2*2/(1*1) = 8
    m1, m2 = konst.super_lsi_constants(2.0, 3.0, 1e9, 0.0, 1.0, 1.0, -1.0)
    assert m1 == pytest.approx(8.0, rel=1e-12)
    assert m2 == 0.0  # log 1


def test_super_lsi_vanishing_window():
    m1, _ = konst.super_lsi_constants(2.0, 3.0, 1e-9, 0.0, 2.0, 1.0, -1.0)
    assert m1 == pytest.approx(0.0, abs=1e-7)


def test_super_lsi_degenerate_exponents():
    with pytest.raises(DegenerateExponents):
        konst.super_lsi_constants(3.0, 2.0, 1.0, 0.0, 1.0, 1.0, -1.0)
    with pytest.raises(DegenerateExponents):
        konst.super_lsi_constants(2.0, 2.0, 1.0, 0.0, 1.0, 1.0, -1.0)


def test_hyper_exponent_frozen_value():
    # eta0=1, eps=2, p=2, dt=1: q = e + 1
    assert konst.hyper_exponent(2.0, 1.0, 2.0, 1.0) == pytest.approx(math.e + 1.0, abs=1e-12)


def _c_kappa_numeric(kappa, Lambda, k3, lam):
    """Independent one-variable maximization of 2 lam Lambda y^2 - (K3/2) y^kappa."""
    res = minimize_scalar(
        lambda y: -(2 * lam * Lambda * y ** 2 - 0.5 * k3 * y ** kappa),
        bounds=(0.0, 1e3),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return -res.fun / lam ** (kappa / (kappa - 2.0))


def test_c_kappa_reference_point():
    # kappa=4, Lambda=1, K3=1: maximizer y^2 = 2 lam, value 2 lam^2 -> C = 2
    assert konst.c_kappa(4.0, 1.0, 1.0) == pytest.approx(2.0, abs=1e-12)
    assert konst.c_kappa(4.0, 1.0, 1.0) == pytest.approx(_c_kappa_numeric(4.0, 1.0, 1.0, 0.7), abs=1e-9)


@pytest.mark.parametrize("kappa,Lambda,k3,lam", [(3.0, 0.8, 1.3, 0.4), (4.0, 2.0, 0.5, 1.1), (5.5, 1.2, 2.0, 0.25)])
def test_c_kappa_against_numeric_maximization(kappa, Lambda, k3, lam):
    assert konst.c_kappa(kappa, Lambda, k3) == pytest.approx(
        _c_kappa_numeric(kappa, Lambda, k3, lam), rel=1e-8
    )


def test_analytic_c1_reference_point():
    # kappa=4, delta=1: min of t^4 - lam t^2 is -lam^2/4, so c1 = 1/4
    assert konst.analytic_c1(4.0, 1.0) == pytest.approx(0.25, abs=1e-14)


@pytest.mark.parametrize("kappa,delta,lam", [(4.0, 1.0, 0.8), (3.0, 0.5, 1.3), (6.0, 2.0, 0.4)])
def test_analytic_c1_against_numeric_minimization(kappa, delta, lam):
    res = minimize_scalar(
        lambda u: delta * u ** kappa - lam * u ** 2,
        bounds=(0.0, 1e3),
        method="bounded",
        options={"xatol": 1e-12},
    )
    c1 = konst.analytic_c1(kappa, delta)
    assert -c1 * lam ** (kappa / (kappa - 2.0)) == pytest.approx(res.fun, rel=1e-8, abs=1e-12)


def test_mtilde_reference_constants():
    mb = konst.mtilde_bound(4.0, 1.0, 1.0, 1, 0.5, 0.5)
    assert mb.c_kappa == pytest.approx(2.0, abs=1e-12)
    assert mb.k0 == pytest.approx(2.0, abs=1e-12)
    assert mb.c1 == pytest.approx(8.0, abs=1e-12)
    assert mb.c2 == pytest.approx(4.0, abs=1e-12)
    # branch 1: K0 delta^{-1} lam = 2 * 2 * 0.5 = 2
    assert mb.branch_fast == pytest.approx(2.0, abs=1e-12)
    assert mb.log_bound == pytest.approx(2.0, abs=1e-12)


def test_mtilde_small_lambda_limit():
    values = [konst.mtilde_bound(4.0, 1.0, 1.0, 1, 1.0, lam).bound for lam in (0.5, 0.1, 0.01, 1e-4)]
    assert all(v >= 1.0 for v in values)
    assert all(a >= b for a, b in zip(values, values[1:]))  # nonincreasing toward 1
    assert values[-1] == pytest.approx(1.0, rel=1e-2)


def test_mtilde_rejects_bad_input():
    with pytest.raises(ValueError):
        konst.mtilde_bound(2.0, 1.0, 1.0, 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        konst.mtilde_bound(4.0, -1.0, 1.0, 1, 1.0, 1.0)


def test_harnack_factor():
    assert konst.harnack_factor(2.0, 1.0, 0.5, 1.0) == pytest.approx(math.exp(1.0), abs=1e-12)
    assert konst.harnack_factor(2.0, 1.0, 0.5, 0.0) == 1.0


def test_supercontractive_lambda0_and_cpq():
    lam0 = konst.supercontractive_lambda0(2.0, 3.0, 1.0, 1.0)
    assert lam0 == pytest.approx(1.5)
    c = konst.cpq_constant(2.0, 3.0, 1.0, 1.0, 1.0, 2.65)
    assert c == pytest.approx(2.0 ** 3 * math.exp(0.5) * 2.65, rel=1e-12)


def test_power_drift_envelope_structure():
    env = konst.power_drift_envelope(4.0, 1.0, 1.0, 1, 0.3)
    # minimizer: derivative of the raw profile vanishes there
    h = 1e-5
    g0 = env.g(env.y0 * (1 - h))
    g1 = env.g(env.y0 * (1 + h))
    assert g0 >= env.floor - 1e-9 * abs(env.floor)
    assert g1 >= env.floor - 1e-9 * abs(env.floor)
    # clipped flat below y0, increasing beyond
    assert env(0.0) == env.floor
    assert env(env.y0 * 0.5) == env.floor
    ys = np.geomspace(env.y0, env.y0 * 1e6, 40)
    vals = [env(y) for y in ys]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    # midpoint convexity on a coarse grid spanning the junction
    pts = np.geomspace(max(env.y0 * 1e-2, 1e-3), env.y0 * 1e4, 25)
    for i in range(len(pts) - 2):
        a, b = pts[i], pts[i + 2]
        assert env(0.5 * (a + b)) <= 0.5 * (env(a) + env(b)) + 1e-9 * (1 + abs(env(b)))
