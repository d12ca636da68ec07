import math

import numpy as np
import pytest
from scipy.integrate import quad

from evolab import constants as konst
from evolab import inequalities as ineq
from evolab import oracle, presets
from evolab import testfunctions as tf
from evolab.engine import McEstimate, PathConfig, SeedLineage
from evolab.errors import ExpMomentDiverged, FitIllConditioned, RegimeMismatch
from evolab.measures import estimate_measure
from evolab.operators import PotentialSpec

OU = presets.ou(1.0, 1.0)
POWER4 = presets.power(4.0)
CFG = PathConfig(step_size=2e-3)
LIN = SeedLineage(777)


@pytest.fixture(scope="module")
def mu_ou_pair():
    a = estimate_measure(OU, 0.0, n=20_000, config=CFG, lineage=SeedLineage(41))
    b = estimate_measure(OU, 1.0, n=20_000, config=CFG, lineage=SeedLineage(42))
    return a, b


@pytest.fixture(scope="module")
def mu_p4_pair():
    a = estimate_measure(POWER4, 0.0, n=20_000, config=CFG, lineage=SeedLineage(43))
    b = estimate_measure(POWER4, 1.0, n=20_000, config=CFG, lineage=SeedLineage(44))
    return a, b


# --- verdict logic -------------------------------------------------------------------

def test_verdict_rules():
    assert ineq.verdict_for(1.0, 0.1, 10.0) == "pass"
    assert ineq.verdict_for(-1.0, 0.1, 10.0) == "fail"
    assert ineq.verdict_for(0.5, 2.0, 1.0) == "inconclusive"  # noisy and dominated
    assert ineq.verdict_for(0.0, 0.0, 1.0) == "pass"          # exact equality case
    assert ineq.verdict_for(-1e-18, 0.0, 1.0) == "fail"
    assert ineq.verdict_for(math.inf, math.inf, 1.0) == "pass"
    assert ineq.verdict_for(0.05, 0.1, 100.0) == "pass"       # noisy but tiny vs rhs


# --- gradient estimate ----------------------------------------------------------------

def test_gradient_estimate_linear_equality_case():
    rep = ineq.gradient_estimate_check(OU, tf.linear(1.0), 1.0, 0.0, 1.0, np.array([0.3]), n=20_000, config=CFG, lineage=LIN)
    assert rep.verdict != "fail"
    # equality case: lhs/rhs -> 1 up to the O(h) flow-derivative bias
    assert rep.lhs.value / rep.rhs.value == pytest.approx(1.0, abs=0.02)


def test_gradient_estimate_constant_trivial():
    rep = ineq.gradient_estimate_check(OU, tf.constant(2.0), 2.0, 0.0, 0.5, np.array([0.0]), n=1024, config=CFG, lineage=LIN)
    assert rep.lhs.value == 0.0
    assert rep.verdict == "pass"


def test_gradient_estimate_power_drift_gaussian():
    rep = ineq.gradient_estimate_check(POWER4, tf.gaussian_bump(1.0, 0.5), 2.0, 0.0, 0.5, np.array([0.4]), n=20_000, config=CFG, lineage=LIN)
    assert rep.verdict == "pass"


# --- kernel LSI -----------------------------------------------------------------------

def test_kernel_lsi_constant_exact_equality():
    rep = ineq.kernel_lsi_check(OU, tf.constant(3.0), 2.0, 0.0, 1.0, np.array([0.1]), n=1024, config=CFG, lineage=LIN)
    assert rep.margin == 0.0
    assert rep.margin_stderr == 0.0
    assert rep.verdict == "pass"


def test_kernel_lsi_gaussian_passes():
    f = tf.gaussian_bump(1.0, 0.0, shift=0.1)
    rep = ineq.kernel_lsi_check(OU, f, 2.0, 0.0, 1.0, np.array([0.5]), n=40_000, config=CFG, lineage=LIN)
    assert rep.verdict == "pass"


def test_kernel_lsi_constant_saturates():
    # the gradient-term constant (p^2 Lambda/|r0|)(1 - e^{2 r0 dt}) saturates at p^2 Lambda/|r0|
    f = tf.gaussian_bump(1.0, 0.0, shift=0.1)
    cfg = PathConfig(step_size=0.05)
    small = ineq.kernel_lsi_check(OU, f, 2.0, 0.0, 1.0, np.array([0.0]), n=1024, config=cfg, lineage=LIN)
    big = ineq.kernel_lsi_check(OU, f, 2.0, 0.0, 30.0, np.array([0.0]), n=1024, config=cfg, lineage=LIN)
    assert small.details["constant"] < big.details["constant"]
    assert big.details["constant"] == pytest.approx(4.0, rel=1e-10)  # p^2 Lambda / |r0| = 4


# --- Harnack ---------------------------------------------------------------------------

def test_harnack_same_point_is_jensen():
    f = tf.gaussian_bump(1.0, 0.3)
    rep = ineq.harnack_check(OU, f, 2.0, 0.0, 0.5, np.array([0.2]), np.array([0.2]), n=20_000, config=CFG, lineage=LIN)
    assert rep.details["factor"] == 1.0
    assert rep.verdict == "pass"
    assert rep.margin >= 0.0  # Jensen gap is nonnegative pathwise in the mean


def test_harnack_constant_function_margin():
    c = 1.5
    p = 2.0
    rep = ineq.harnack_check(OU, tf.constant(c), p, 0.0, 0.5, np.array([1.0]), np.array([0.0]), n=1024, config=CFG, lineage=LIN)
    factor = rep.details["factor"]
    assert rep.margin == pytest.approx(c ** p * (factor - 1.0), rel=1e-12)
    assert rep.verdict == "pass"


def test_harnack_ou_rational_function_vs_quadrature():
    # cross-check both sides by oracle quadrature at p=2, |x-y|=1, dt=0.5
    a, z = 0.7, 0.2
    f = tf.gaussian_bump(a, z)
    x, y = 0.8, -0.2
    rep = ineq.harnack_check(OU, f, 2.0, 0.0, 0.5, np.array([x]), np.array([y]), n=60_000, config=PathConfig(step_size=1e-3), lineage=LIN)
    ou = oracle.OUSpec(1.0, 1.0)
    lhs_exact = oracle.ou_apply(ou, f.ou_form, 0.0, 0.5, x) ** 2
    my, vy = oracle.ou_mean_var(ou, 0.0, 0.5, [y])
    rhs_exact = rep.details["factor"] * quad(
        lambda u: math.exp(-2 * a * (u - z) ** 2) * math.exp(-((u - my[0]) ** 2) / (2 * vy)) / math.sqrt(2 * math.pi * vy),
        -30, 30,
    )[0]
    assert rep.lhs.value == pytest.approx(lhs_exact, rel=0.02)
    assert rep.rhs.value == pytest.approx(rhs_exact, rel=0.02)
    assert rep.verdict == "pass"


# --- measure LSI -------------------------------------------------------------------------

def test_measure_lsi_constant_zero_lhs(mu_ou_pair):
    mu, _ = mu_ou_pair
    rep = ineq.measure_lsi_check(OU, mu, tf.constant(2.0), 0.5, beta_fn=1.0)
    assert rep.lhs.value == 0.0
    assert rep.verdict == "pass"


def test_measure_lsi_scaling_invariance(mu_ou_pair):
    mu, _ = mu_ou_pair
    f1 = tf.gaussian_bump(2.0, 0.5)
    f2 = tf.gaussian_bump(2.0, 0.5, scale=2.0)
    r1 = ineq.measure_lsi_check(OU, mu, f1, 0.3, beta_fn=1.0)
    r2 = ineq.measure_lsi_check(OU, mu, f2, 0.3, beta_fn=1.0)
    assert r1.verdict == r2.verdict
    # scale = 2 is a power of two: normalized margins agree to machine precision
    assert r2.margin / 4.0 == pytest.approx(r1.margin, rel=1e-12, abs=1e-15)


def test_measure_lsi_gaussian_against_gross_constant(mu_ou_pair):
    mu, _ = mu_ou_pair
    # the standard Gaussian satisfies LSI with constant 1 in this normalization:
    # eps = 1, beta = 0 must pass for every C^1_b member
    for f in tf.standard_family(d=1):
        rep = ineq.measure_lsi_check(OU, mu, f, 1.0, beta_fn=0.0)
        assert rep.verdict != "fail", (f.name, rep)


# --- constants plumbing -------------------------------------------------------------------

def test_super_lsi_reexport():
    m1, m2 = ineq.super_lsi_constants(2.0, 3.0, 1e9, 0.0, 1.0, 1.0, -1.0)
    assert m1 == pytest.approx(8.0)
    assert m2 == 0.0


# --- hypercontractivity recursion ------------------------------------------------------------

def test_hyper_recursion_exponent_value():
    assert konst.hyper_exponent(2.0, 1.0, 2.0, 1.0) == pytest.approx(math.e + 1.0)


def test_hyper_recursion_ou_nelson_clock(mu_ou_pair):
    # for the OU preset, beta = 0 is admissible at eps = 1 (Gaussian LSI), and
    # q(t) = 1 + (p-1) e^{2 dt} is exactly the sharp hypercontractivity clock
    mu_s, mu_t = mu_ou_pair
    f = tf.gaussian_bump(1.0, 0.4, shift=0.2)
    rep = ineq.hypercontractivity_recursion_check(
        OU, f, 2.0, 1.0, 0.0, 0.0, 1.0, mu_s, mu_t, config=CFG, lineage=LIN
    )
    assert rep.parameters["q_t"] == pytest.approx(1.0 + math.exp(2.0), rel=1e-12)
    assert rep.verdict != "fail"


def test_hyper_recursion_constant(mu_ou_pair):
    mu_s, mu_t = mu_ou_pair
    rep = ineq.hypercontractivity_recursion_check(
        OU, tf.constant(2.0), 2.0, 1.0, 0.5, 0.0, 1.0, mu_s, mu_t, config=CFG, lineage=LIN
    )
    assert rep.verdict != "fail"  # |c| <= e^{m} |c|


def test_hyper_recursion_zero_window(mu_ou_pair):
    mu_s, _ = mu_ou_pair
    f = tf.gaussian_bump(1.0, 0.0)
    rep = ineq.hypercontractivity_recursion_check(
        OU, f, 2.0, 1.0, 0.0, 0.0, 0.0, mu_s, mu_s, config=CFG, lineage=LIN
    )
    assert rep.parameters["q_t"] == pytest.approx(2.0)
    assert rep.verdict != "fail"


# --- supercontractivity ------------------------------------------------------------------------

def test_supercontractivity_ou_diverges(mu_ou_pair):
    mu_s, mu_t = mu_ou_pair
    with pytest.raises(ExpMomentDiverged):
        ineq.supercontractivity_norm_bound(
            OU, tf.standard_family(d=1), 2.0, 3.0, 0.0, 1.0, mu_s, mu_t, config=CFG, lineage=LIN
        )


def test_supercontractivity_power4_passes(mu_p4_pair):
    mu_s, mu_t = mu_p4_pair
    rep = ineq.supercontractivity_norm_bound(
        POWER4, tf.standard_family(d=1), 2.0, 3.0, 0.0, 1.0, mu_s, mu_t,
        n_inner=1000, m_points=128, config=CFG, lineage=LIN,
    )
    assert rep.verdict == "pass"
    assert rep.rhs.value >= 2.0 ** 3  # C >= 2^q


def test_supercontractivity_constant_ratio_bounded(mu_p4_pair):
    mu_s, mu_t = mu_p4_pair
    fam = tf.TestFunctionFamily("const", (tf.constant(2.0),))
    rep = ineq.supercontractivity_norm_bound(
        POWER4, fam, 2.0, 3.0, 0.0, 1.0, mu_s, mu_t, n_inner=500, m_points=64, config=CFG, lineage=LIN
    )
    assert rep.lhs.value == pytest.approx(1.0, rel=1e-9)
    assert rep.verdict == "pass"


# --- ultraboundedness ---------------------------------------------------------------------------

def test_ultrabounded_regime_guard(mu_ou_pair):
    mu_s, mu_t = mu_ou_pair
    with pytest.raises(RegimeMismatch):
        ineq.ultrabounded_bound_check(OU, tf.standard_family(d=1), 0.0, 1.0, mu_s, mu_t)


def test_ultrabounded_power4_analytic(mu_p4_pair):
    mu_s, mu_t = mu_p4_pair
    rep = ineq.ultrabounded_bound_check(
        POWER4, tf.standard_family(d=1), 0.0, 1.0, mu_s, mu_t,
        m_supplier="analytic", n=4000, config=CFG, lineage=LIN,
    )
    assert rep.verdict == "pass"


def test_ultrabounded_power4_empirical(mu_p4_pair):
    mu_s, mu_t = mu_p4_pair
    rep = ineq.ultrabounded_bound_check(
        POWER4, tf.standard_family(d=1), 0.0, 1.0, mu_s, mu_t,
        m_supplier="empirical", n=4000, config=CFG, lineage=LIN,
    )
    assert rep.verdict == "pass"


def test_c2inf_decreasing_in_window(mu_p4_pair):
    mu_s, mu_t = mu_p4_pair
    values = []
    for dt in (0.5, 1.0, 2.0):
        reg = POWER4.regime
        lam = 1.0 / (2.0 * dt)
        m = konst.mtilde_bound(reg.kappa, reg.k3, 1.0, 1, 0.5 * dt, lam).bound
        values.append(konst.c2inf_constant(dt, 1.0, 1.0, m))
    assert values[0] >= values[1] >= values[2]


# --- blow-up fit machinery ------------------------------------------------------------------------

def test_fit_blowup_recovers_synthetic_model():
    deltas = np.geomspace(0.05, 0.75, 7)
    C = 0.8
    sups = np.exp(C / deltas ** 2)
    slope, c_fit = ineq.fit_blowup_exponent(deltas, sups)
    assert slope == pytest.approx(2.0, abs=1e-6)
    assert c_fit == pytest.approx(C, rel=1e-6)


def test_fit_blowup_too_few_points():
    with pytest.raises(FitIllConditioned):
        ineq.fit_blowup_exponent([0.1, 0.2, 0.3, 0.4], [10.0, 5.0, 3.0, 2.0])
    # six points but half unusable (sup <= 1)
    with pytest.raises(FitIllConditioned):
        ineq.fit_blowup_exponent([0.1, 0.2, 0.3, 0.4, 0.5, 0.6], [3.0, 2.0, 1.5, 0.9, 0.8, 0.7])


def test_blowup_fit_regime_guard(mu_ou_pair):
    mu_s, _ = mu_ou_pair
    with pytest.raises(RegimeMismatch):
        ineq.blowup_exponent_fit(OU, [0.1, 0.15, 0.22, 0.33, 0.5], 0.0, mu_s)


def test_heat_kernel_regime_guard(mu_ou_pair):
    mu_s, _ = mu_ou_pair
    with pytest.raises(RegimeMismatch):
        ineq.heat_kernel_sup_check(OU, 0.0, 0.5, 1.0, mu_s)


# --- beta profile -----------------------------------------------------------------------------------

def test_beta_profile_structure(mu_p4_pair):
    mu_s, _ = mu_p4_pair
    profile = ineq.beta_profile(POWER4, np.geomspace(0.05, 0.5, 6), tf.bump_family(d=1), 0.0, mu_s)
    bh = profile.beta_hats
    assert all(a >= b - 1e-12 for a, b in zip(bh, bh[1:]))  # nonincreasing in eps
    assert profile.c1_analytic == pytest.approx(konst.analytic_c1(4.0, 0.25))
    assert profile.target_exponent == 2.0


def test_beta_profile_huge_epsilon_vanishes(mu_p4_pair):
    mu_s, _ = mu_p4_pair
    profile = ineq.beta_profile(POWER4, [50.0], tf.bump_family(d=1), 0.0, mu_s)
    assert profile.beta_hats[0] == 0.0


def test_beta_profile_self_consistent_with_measure_lsi(mu_p4_pair):
    # beta_hat is built as the family's max defect, so the family itself must
    # pass measure_lsi with beta_fn = interpolated beta_hat at matched eps
    mu_s, _ = mu_p4_pair
    family = tf.bump_family(d=1, centers=np.linspace(0, 2.0, 7), widths=(0.3, 0.8))
    profile = ineq.beta_profile(POWER4, [0.1, 0.2, 0.4], family, 0.0, mu_s)
    beta_fn = profile.beta_fn()
    for f in family:
        rep = ineq.measure_lsi_check(POWER4, mu_s, f, 0.2, beta_fn)
        assert rep.verdict != "fail", (f.name, rep)


# --- uniform integrability ---------------------------------------------------------------------------

def test_uniform_integrability_power4(mu_p4_pair):
    mu_s, mu_t = mu_p4_pair
    rep = ineq.uniform_integrability_check(
        POWER4, tf.standard_family(d=1), 0.0, 1.0, (0.5, 1.0, 2.0, 4.0), mu_s, mu_t,
        n_inner=500, m_points=64, config=CFG, lineage=LIN,
    )
    assert rep.verdict == "pass"
    assert rep.details["monotone"]
    tails = rep.details["worst_tails"]
    assert tails[-1] == 0.0  # r beyond sup|Gf|: empty event


# --- potential term ------------------------------------------------------------------------------------

def _quadratic_potential():
    return PotentialSpec(c=lambda t, x: 1.0 + np.asarray(x)[..., 0] ** 2, c0=1.0, source="1 + x1^2")


def test_potential_zero_equality():
    pot = PotentialSpec(c=lambda t, x: np.zeros(np.asarray(x).shape[:-1]), c0=0.0)
    f = tf.gaussian_bump(1.0, 0.0, shift=0.2)
    rep = ineq.potential_contraction_check(OU, pot, f, 0.0, 1.0, np.array([0.1]), n=2048, config=CFG, lineage=LIN)
    assert rep.margin == 0.0
    assert rep.verdict == "pass"


def test_potential_constant_exact_scaling():
    pot = PotentialSpec(c=lambda t, x: np.ones(np.asarray(x).shape[:-1]), c0=1.0)
    f = tf.gaussian_bump(1.0, 0.0, shift=0.2)
    rep = ineq.potential_contraction_check(OU, pot, f, 0.0, 1.0, np.array([0.1]), n=2048, config=CFG, lineage=LIN)
    assert rep.margin == 0.0  # weights are exactly e^{-dt}: both sides identical
    assert rep.verdict == "pass"


def test_potential_quadratic_power4_strict_margin(mu_p4_pair):
    mu_s, _ = mu_p4_pair
    f = tf.gaussian_bump(1.0, 0.0, shift=0.2)
    rep = ineq.potential_contraction_check(
        POWER4, _quadratic_potential(), f, 0.0, 1.0, np.array([0.0]),
        n=20_000, config=CFG, lineage=LIN, measure_s=mu_s,
    )
    assert rep.verdict == "pass"
    assert rep.margin > 3.0 * rep.margin_stderr  # strict margin
    assert rep.details["subinvariance_margin"] > 0.0


# --- homogeneous scaling invariance across checkers ------------------------------------------------------

@pytest.mark.parametrize("scale", [2.0, 8.0])
def test_gradient_and_harnack_scale_invariance(scale):
    f1 = tf.gaussian_bump(1.5, 0.2)
    f2 = tf.gaussian_bump(1.5, 0.2, scale=scale)
    g1 = ineq.gradient_estimate_check(OU, f1, 2.0, 0.0, 0.5, np.array([0.1]), n=4096, config=CFG, lineage=LIN)
    g2 = ineq.gradient_estimate_check(OU, f2, 2.0, 0.0, 0.5, np.array([0.1]), n=4096, config=CFG, lineage=LIN)
    assert g1.verdict == g2.verdict
    assert g2.margin / scale ** 2 == pytest.approx(g1.margin, rel=1e-12, abs=1e-15)
    h1 = ineq.harnack_check(OU, f1, 2.0, 0.0, 0.5, np.array([0.5]), np.array([-0.5]), n=4096, config=CFG, lineage=LIN)
    h2 = ineq.harnack_check(OU, f2, 2.0, 0.0, 0.5, np.array([0.5]), np.array([-0.5]), n=4096, config=CFG, lineage=LIN)
    assert h1.verdict == h2.verdict
    assert h2.margin / scale ** 2 == pytest.approx(h1.margin, rel=1e-12, abs=1e-15)


# --- closed-form oracle regression: no checker fails on OU ------------------------------------------------

def _ou_quadrature(fn, mean, var):
    lo, hi = mean - 12 * math.sqrt(var), mean + 12 * math.sqrt(var)
    val, _ = quad(lambda y: fn(y) * math.exp(-((y - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var), lo, hi, limit=200)
    return val


def test_oracle_regression_no_fail_on_ou():
    """Gradient, Harnack, and kernel-LSI margins evaluated in closed form
    (exact transition law + quadrature) stay nonnegative over 50 random draws."""
    rng = np.random.default_rng(2024)
    for draw in range(50):
        theta = rng.uniform(0.5, 2.0)
        qv = rng.uniform(0.5, 2.0)
        dt = rng.uniform(0.2, 1.5)
        x = rng.uniform(-1.5, 1.5)
        a = rng.uniform(0.3, 2.0)
        z = rng.uniform(-1.0, 1.0)
        p = rng.uniform(1.5, 4.0)
        ou = oracle.OUSpec(theta, qv)
        mean, var = oracle.ou_mean_var(ou, 0.0, dt, [x])
        f = oracle.GaussBump(a, z)
        fprime = f.derivative()
        # gradient estimate, p = 1: |d/dx G f| = e^{-theta dt} |G f'| <= e^{r0 dt} G|f'|
        lhs_g = math.exp(-theta * dt) * abs(f.derivative().ou_expect(mean[0], var))
        rhs_g = math.exp(-theta * dt) * _ou_quadrature(lambda y: abs(fprime(y)), mean[0], var)
        assert lhs_g <= rhs_g + 1e-9 * (1 + abs(rhs_g))
        # Harnack at p
        y_pt = rng.uniform(-1.0, 1.0)
        mean_y, var_y = oracle.ou_mean_var(ou, 0.0, dt, [y_pt])
        factor = konst.harnack_factor(p, qv, dt, (x - y_pt) ** 2)
        lhs_h = abs(f.ou_expect(mean[0], var)) ** p
        rhs_h = factor * _ou_quadrature(lambda y: abs(f(y)) ** p, mean_y[0], var_y)
        assert lhs_h <= rhs_h + 1e-9 * (1 + abs(rhs_h))
        # kernel LSI at p = 2 (Lambda = eta0 = qv, r0 = -theta)
        const = 4.0 * qv / theta * (1.0 - math.exp(-2.0 * theta * dt))
        lhs_l = _ou_quadrature(lambda y: f(y) ** 2 * math.log(max(f(y) ** 2, 1e-300)), mean[0], var)
        gf2 = _ou_quadrature(lambda y: fprime(y) ** 2, mean[0], var)
        mf2 = _ou_quadrature(lambda y: f(y) ** 2, mean[0], var)
        rhs_l = const * gf2 + mf2 * math.log(mf2)
        assert lhs_l <= rhs_l + 1e-9 * (1 + abs(rhs_l))


def test_report_string_rendering(mu_ou_pair):
    mu, _ = mu_ou_pair
    rep = ineq.measure_lsi_check(OU, mu, tf.constant(1.0), 0.5, beta_fn=1.0)
    assert "measure_lsi" in str(rep)
