"""The inequality harness: gradient bounds, log-Sobolev, Harnack, potentials.

Every checker evaluates both sides by Monte Carlo with shared noise and issues
a pass/fail/inconclusive verdict at 3 standard errors of the margin.

Run:  python demos/04_smoothing_inequalities.py
"""

import numpy as np

from evolab import inequalities as ineq
from evolab import presets
from evolab import testfunctions as tf
from evolab.engine import PathConfig, SeedLineage
from evolab.measures import estimate_measure
from evolab.operators import PotentialSpec

cfg = PathConfig(step_size=2e-3)
lin = SeedLineage(99)
OU = presets.ou(1.0, 1.0)
P4 = presets.power(4.0)

print("pointwise gradient estimate |grad G f|^p <= e^{p r0 dt} G |grad f|^p:")
for spec, tag in ((OU, "ou"), (P4, "power4")):
    rep = ineq.gradient_estimate_check(spec, tf.gaussian_bump(1.0, 0.0), 2.0, 0.0, 0.5, np.array([0.6]), n=40_000, config=cfg, lineage=lin)
    print(f"  {tag:8s} {rep}")

print()
print("kernel log-Sobolev inequality for the transition measures:")
f = tf.gaussian_bump(1.0, 0.0, shift=0.1)
rep = ineq.kernel_lsi_check(OU, f, 2.0, 0.0, 1.0, np.array([0.5]), n=40_000, config=cfg, lineage=lin)
print(f"  {rep}")

print()
print("Harnack two-point bound with the Gaussian factor:")
for (x, y) in ((0.2, 0.2), (1.0, -1.0)):
    rep = ineq.harnack_check(OU, f, 2.0, 0.0, 0.5, np.array([x]), np.array([y]), n=40_000, config=cfg, lineage=lin)
    print(f"  x={x:+.1f} y={y:+.1f} factor={rep.details['factor']:9.3f}  {rep.verdict}  margin {rep.margin:.4g}")

print()
print("measure log-Sobolev with the empirical defect profile beta_hat(eps):")
mu = estimate_measure(P4, 0.0, n=60_000, config=cfg, lineage=SeedLineage(100))
profile = ineq.beta_profile(P4, np.geomspace(0.05, 0.5, 6), tf.bump_family(d=1), 0.0, mu)
print("  eps:      ", np.round(profile.epsilons, 3).tolist())
print("  beta_hat: ", np.round(profile.beta_hats, 3).tolist())
print(f"  tail exponent {profile.tail_exponent:.2f} (target {profile.target_exponent}),"
      f" analytic c1 = {profile.c1_analytic}")
rep = ineq.measure_lsi_check(P4, mu, tf.gaussian_bump(2.0, 1.0), 0.2, profile.beta_fn())
print(f"  {rep}")

print()
print("potential term: G_c f <= e^{-c0 dt} G f with Feynman-Kac weights:")
pot = PotentialSpec(c=lambda t, x: 1.0 + np.asarray(x)[..., 0] ** 2, c0=1.0, source="1 + x1^2")
rep = ineq.potential_contraction_check(P4, pot, f, 0.0, 1.0, np.array([0.0]), n=40_000, config=cfg, lineage=lin, measure_s=mu)
print(f"  {rep}")
print(f"  sub-invariance margin: {rep.details['subinvariance_margin']:.4g}")
