import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab import oracle, presets
from evolab import testfunctions as tf
from evolab.engine import (
    McEstimate,
    PathConfig,
    SeedLineage,
    apply,
    apply_to,
    backward_derivative_check,
    chapman_kolmogorov_check,
    feynman_kac_apply,
    gradient_apply,
    kernel_density,
    mean_estimate,
    merge_ensembles,
    simulate,
)
from evolab.errors import BlowupError, DimensionTooHigh
from evolab.operators import OperatorSpec, PotentialSpec

OU = presets.ou(1.0, 1.0)
OU_ORACLE = oracle.OUSpec(1.0, 1.0)
CFG = PathConfig(step_size=2e-3)
LIN = SeedLineage(12345)


def _var_stderr(v, n):
    return v * math.sqrt(2.0 / (n - 1))


# --- simulate contracts -----------------------------------------------------------

def test_zero_window_returns_start():
    ens = simulate(OU, 1.0, 1.0, np.array([0.7]), 64, CFG, LIN)
    assert np.all(ens.states == 0.7)
    assert ens.divergent_count == 0


def test_terminal_law_matches_oracle():
    n = 40_000
    ens = simulate(OU, 0.0, 1.0, np.array([0.0]), n, CFG, LIN)
    mean, var = oracle.ou_mean_var(OU_ORACLE, 0.0, 1.0, [0.0])
    sample_var = float(ens.states.var(ddof=1))
    assert abs(ens.states.mean() - mean[0]) <= 4.0 * math.sqrt(var / n)
    assert abs(sample_var - var) <= 4.0 * _var_stderr(var, n)


def test_bit_identical_reruns():
    a = simulate(OU, 0.0, 0.5, np.array([0.3]), 4096, CFG, LIN)
    b = simulate(OU, 0.0, 0.5, np.array([0.3]), 4096, CFG, LIN)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.weights, b.weights)


def test_different_lineages_differ():
    a = simulate(OU, 0.0, 0.5, np.array([0.3]), 512, CFG, SeedLineage(1))
    b = simulate(OU, 0.0, 0.5, np.array([0.3]), 512, CFG, SeedLineage(2))
    c = simulate(OU, 0.0, 0.5, np.array([0.3]), 512, CFG, SeedLineage(1, counter=9))
    assert not np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)


def test_shard_split_equals_full_run():
    cfg = PathConfig(step_size=5e-3, shard_size=1024)
    full = simulate(OU, 0.0, 0.4, np.array([0.0]), 4096, cfg, LIN)
    h1 = simulate(OU, 0.0, 0.4, np.array([0.0]), 2048, cfg, LIN)
    h2 = simulate(OU, 0.0, 0.4, np.array([0.0]), 2048, cfg, LIN.shifted(2))
    merged = merge_ensembles(h1, h2)
    assert np.array_equal(full.states, merged.states)
    f = tf.trig(1.0)
    e_full = apply_to(full, f)
    e_merged = McEstimate.combine([apply_to(h1, f), apply_to(h2, f)])
    assert e_merged.value == pytest.approx(e_full.value, rel=1e-12, abs=1e-15)


def test_time_dependent_diffusion_matches_oracle_variance():
    theta = lambda t: 2.0 + math.sin(t)
    spec = presets.ou_time_dependent(theta, q=1.0, theta_min=1.0)
    n = 30_000
    ens = simulate(spec, 0.0, math.pi, np.array([1.0]), n, CFG, LIN)
    _, var = oracle.ou_mean_var(oracle.OUSpec(theta, 1.0), 0.0, math.pi, [1.0])
    assert abs(float(ens.states.var(ddof=1)) - var) <= 4.0 * _var_stderr(var, n)


def test_blowup_error_on_explosive_drift():
    bad = OperatorSpec(
        dimension=1,
        diffusion=lambda t: np.eye(1),
        drift=lambda t, x: np.asarray(x) ** 3,  # repulsive cubic
        eta0=1.0,
        Lambda=1.0,
        r0=-1.0,  # false claim; the engine only sees trajectories
        time_window=(-100.0, 100.0),
        name="explosive",
    )
    with pytest.raises(BlowupError) as err:
        simulate(bad, 0.0, 4.0, np.array([3.0]), 256, PathConfig(step_size=1e-2, tame=False), LIN)
    assert err.value.divergent > 0


def test_per_path_starts():
    starts = np.linspace(-1, 1, 128)[:, None]
    ens = simulate(OU, 0.0, 0.0, starts, 128, CFG, LIN)
    assert np.array_equal(ens.states, starts)


# --- estimators ----------------------------------------------------------------------

def test_constants_preserved_exactly():
    est = apply(OU, tf.constant(3.7), 0.0, 1.0, np.array([0.2]), 512, CFG, LIN)
    assert est.value == 3.7
    assert est.stderr == 0.0


def test_apply_quadratic_within_four_stderr():
    f = tf.polynomial((0.0, 0.0, 1.0))
    est = apply(OU, f, 0.0, 1.0, np.array([0.5]), 100_000, PathConfig(step_size=1e-3), LIN)
    exact = oracle.ou_apply(OU_ORACLE, f.ou_form, 0.0, 1.0, 0.5)
    assert abs(est.value - exact) <= 4.0 * est.stderr


def test_positive_function_positive_estimate():
    f = tf.gaussian_bump(2.0, 0.0)
    est = apply(OU, f, 0.0, 1.0, np.array([0.0]), 2048, CFG, LIN)
    assert est.value > 0.0


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.floats(min_value=0.2, max_value=2.0))
def test_sup_norm_contraction(seed, width):
    f = tf.gaussian_bump(1.0 / (2 * width * width), 0.5, shift=0.1)
    est = apply(OU, f, 0.0, 0.5, np.array([0.3]), 2048, PathConfig(step_size=5e-3), SeedLineage(seed))
    assert abs(est.value) <= f.sup_norm + 3.0 * est.stderr


def test_gradient_linear_function():
    g = gradient_apply(OU, tf.linear(2.0), 0.0, 1.0, np.array([0.3]), 4096, CFG, LIN)
    # flow derivative for OU is exp(-theta dt); CRN collapses the variance
    assert g[0].stderr < 1e-10
    assert g[0].value == pytest.approx(2.0 * math.exp(-1.0), rel=0.01)


def test_gradient_constant_is_zero():
    g = gradient_apply(OU, tf.constant(5.0), 0.0, 0.5, np.array([0.1]), 512, CFG, LIN)
    assert g[0].value == 0.0
    assert g[0].stderr == 0.0


def test_gradient_coordinate_decoupling():
    spec = presets.ou(1.0, 1.0, d=2)
    f = tf.linear(1.0, d=2, axis=0)
    g = gradient_apply(spec, f, 0.0, 0.5, np.zeros(2), 4096, CFG, LIN)
    assert g[0].value == pytest.approx(math.exp(-0.5), rel=0.01)
    assert abs(g[1].value) <= max(3.0 * g[1].stderr, 1e-12)


def test_weak_order_bias_shrinks_with_step():
    f = tf.polynomial((0.0, 0.0, 1.0))
    exact = oracle.ou_apply(OU_ORACLE, f.ou_form, 0.0, 1.0, 0.0)
    n = 200_000
    coarse = apply(OU, f, 0.0, 1.0, np.array([0.0]), n, PathConfig(step_size=0.1), SeedLineage(7))
    fine = apply(OU, f, 0.0, 1.0, np.array([0.0]), n, PathConfig(step_size=0.0125), SeedLineage(7))
    # theta h / 2 relative bias: ~4.3% at h=0.1 vs ~0.5% at h=0.0125
    assert abs(coarse.value - exact) > abs(fine.value - exact)
    assert abs(fine.value - exact) <= 0.01 * exact + 4.0 * fine.stderr


# --- backward derivative and two-parameter law -------------------------------------------

def test_backward_derivative_constant():
    res = backward_derivative_check(OU, tf.constant(2.0), 0.5, 1.5, np.array([0.0]), 512, CFG, LIN)
    assert res.value == 0.0


def test_backward_derivative_gaussian():
    f = tf.gaussian_bump(1.0, 0.0)
    res = backward_derivative_check(
        OU, f, 0.5, 1.5, np.array([0.3]), 60_000, PathConfig(step_size=1e-3), LIN, delta=1e-2
    )
    # centered difference bias O(delta^2) plus Euler bias O(h)
    assert res.value <= 3.0 * res.stderr + 0.02


def test_backward_derivative_degenerate_window():
    with pytest.raises(ValueError):
        backward_derivative_check(OU, tf.constant(1.0), 0.0, 0.001, np.array([0.0]), 64, CFG, LIN, delta=1e-3)


def test_chapman_kolmogorov_constant():
    res = chapman_kolmogorov_check(OU, tf.constant(1.5), 0.0, 0.5, 1.0, np.array([0.0]), 2048, CFG, LIN)
    assert res.value == 0.0


def test_chapman_kolmogorov_linear():
    f = tf.linear(1.0)
    res = chapman_kolmogorov_check(OU, f, 0.0, 0.4, 1.0, np.array([0.8]), 65_536, PathConfig(step_size=1e-3), LIN)
    assert res.value <= 3.0 * res.stderr + 5e-3


def test_chapman_kolmogorov_midpoint_validation():
    with pytest.raises(ValueError):
        chapman_kolmogorov_check(OU, tf.constant(1.0), 0.0, 0.0, 1.0, np.array([0.0]), 64, CFG, LIN)
    with pytest.raises(ValueError):
        chapman_kolmogorov_check(OU, tf.constant(1.0), 0.0, 1.0, 1.0, np.array([0.0]), 64, CFG, LIN)


# --- Feynman-Kac ----------------------------------------------------------------------------

def _const_potential(value):
    return PotentialSpec(c=lambda t, x: np.full(np.asarray(x).shape[:-1], value), c0=value)


def test_feynman_kac_zero_potential_is_bitwise_plain():
    f = tf.gaussian_bump(1.0, 0.0)
    plain = apply(OU, f, 0.0, 1.0, np.array([0.2]), 2048, CFG, LIN)
    fk = feynman_kac_apply(OU, _const_potential(0.0), f, 0.0, 1.0, np.array([0.2]), 2048, CFG, LIN)
    assert fk.value == plain.value
    assert fk.stderr == plain.stderr


def test_feynman_kac_unit_potential_scales_exactly():
    f = tf.gaussian_bump(1.0, 0.0, shift=0.2)
    ens = simulate(OU, 0.0, 1.0, np.array([0.2]), 2048, CFG, LIN, potential=_const_potential(1.0))
    assert np.all(ens.weights == math.exp(-1.0))  # left-endpoint quadrature is exact here
    fk = apply_to(ens, f)
    plain_vals = f(ens.states)
    ref = mean_estimate(plain_vals * math.exp(-1.0), ens.shard_size, ens.alive)
    assert fk.value == ref.value  # identical float path: bit-exact scaling


def test_feynman_kac_bounded_by_infimum_rate():
    pot = PotentialSpec(c=lambda t, x: 1.0 + np.asarray(x)[..., 0] ** 2, c0=1.0)
    f = tf.gaussian_bump(1.0, 0.0, shift=0.3)
    fk = feynman_kac_apply(OU, pot, f, 0.0, 1.0, np.array([0.0]), 20_000, CFG, LIN)
    plain = apply(OU, f, 0.0, 1.0, np.array([0.0]), 20_000, CFG, LIN)
    assert fk.value <= math.exp(-1.0) * plain.value + 3.0 * (fk.stderr + plain.stderr)


# --- kernel density --------------------------------------------------------------------------

def test_kde_matches_oracle_density_at_mean():
    n = 100_000
    de = kernel_density(OU, 0.0, 1.0, np.array([0.5]), n, PathConfig(step_size=1e-3), LIN)
    mean, var = oracle.ou_mean_var(OU_ORACLE, 0.0, 1.0, [0.5])
    exact_peak = 1.0 / math.sqrt(2 * math.pi * var)
    idx = int(np.argmin(np.abs(de.query[:, 0] - mean[0])))
    assert de.density[idx] == pytest.approx(exact_peak, rel=0.05)
    assert de.mass == pytest.approx(1.0, abs=0.01)
    assert de.sup >= de.density[idx]
    assert de.sup_biased_by_bandwidth


def test_kde_dimension_guard():
    spec = presets.ou(1.0, 1.0, d=4)
    with pytest.raises(DimensionTooHigh):
        kernel_density(spec, 0.0, 0.5, np.zeros(4), 1024, CFG, LIN)


def test_kde_2d_runs():
    spec = presets.ou(1.0, 1.0, d=2)
    de = kernel_density(spec, 0.0, 0.5, np.zeros(2), 8192, PathConfig(step_size=5e-3), LIN, grid_points=400)
    assert de.density.min() >= 0.0
    assert de.sup > 0.0


# --- reductions --------------------------------------------------------------------------------

def test_mean_estimate_requires_two_samples():
    with pytest.raises(ValueError):
        mean_estimate(np.array([1.0]))


def test_combine_matches_pooled_run():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=4096), rng.normal(size=4096)
    pooled = mean_estimate(np.concatenate([a, b]), shard_size=4096)
    combined = McEstimate.combine([mean_estimate(a, 4096), mean_estimate(b, 4096)])
    assert combined.value == pytest.approx(pooled.value, rel=1e-13, abs=1e-15)
    assert combined.stderr == pytest.approx(pooled.stderr, rel=1e-10)
    assert combined.n == pooled.n
