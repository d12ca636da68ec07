"""The smoothing hierarchy: supercontractive, ultrabounded, ultracontractive.

The kappa = 4 preset climbs the whole ladder; the Ornstein-Uhlenbeck preset
sits below it (its Gaussian moments of order lambda >= 1/(2 sigma^2) diverge,
so it is not supercontractive).  The script exercises the norm bounds with
their explicit constants and prints the kernel blow-up sweep.

Run:  python demos/05_contractivity_hierarchy.py   (takes a few minutes)
"""

import numpy as np

from evolab import constants as konst
from evolab import inequalities as ineq
from evolab import presets
from evolab import testfunctions as tf
from evolab.engine import PathConfig, SeedLineage
from evolab.errors import ExpMomentDiverged
from evolab.measures import estimate_measure

cfg = PathConfig(step_size=2e-3)
P4 = presets.power(4.0)
OU = presets.ou(1.0, 1.0)
family = tf.standard_family(d=1)

print("estimating evolution measures (burn-in 10/|r0|) ...")
mu_p4_s = estimate_measure(P4, 0.0, n=100_000, config=cfg, lineage=SeedLineage(11))
mu_p4_t = estimate_measure(P4, 1.0, n=60_000, config=cfg, lineage=SeedLineage(12))
mu_ou_s = estimate_measure(OU, 0.0, n=60_000, config=cfg, lineage=SeedLineage(13))
mu_ou_t = estimate_measure(OU, 1.0, n=60_000, config=cfg, lineage=SeedLineage(14))

print()
print("supercontractivity norm bound ||G f||_q^q <= C_pq ||f||_p^q:")
rep = ineq.supercontractivity_norm_bound(P4, family, 2.0, 3.0, 0.0, 1.0, mu_p4_s, mu_p4_t, config=cfg, lineage=SeedLineage(15))
print(f"  power4: {rep}")
try:
    ineq.supercontractivity_norm_bound(OU, family, 2.0, 3.0, 0.0, 1.0, mu_ou_s, mu_ou_t, config=cfg, lineage=SeedLineage(16))
except ExpMomentDiverged as exc:
    print(f"  ou:     ExpMomentDiverged ({exc})")

print()
print("ultraboundedness |G f|(x) <= C_2inf ||f||_2 with the analytic M-bound:")
mb = konst.mtilde_bound(4.0, 1.0, 1.0, 1, delta=0.5, lam=0.5)
print(f"  analytic constants: C_kappa = {mb.c_kappa}, K0 = {mb.k0}, log M = {mb.log_bound:.3f}")
rep = ineq.ultrabounded_bound_check(P4, family, 0.0, 1.0, mu_p4_s, mu_p4_t, m_supplier="analytic", n=8000, config=cfg, lineage=SeedLineage(17))
print(f"  {rep}")

print()
print("L1 -> L2 bound and the heat-kernel sup envelope (frozen C from the sweep):")
fit = ineq.blowup_exponent_fit(
    P4, (0.1, 0.15, 0.22, 0.33, 0.5, 0.75), 0.0, mu_p4_s,
    n=30_000, config=cfg, lineage=SeedLineage(18),
)
print(f"  kernel-sup sweep (log): {np.round(np.log(fit.sups), 2).tolist()}")
print(f"  fitted exponent {fit.slope:.3f} (target {fit.target_exponent}; resolution-limited, see README)")
print(f"  frozen envelope C = {fit.envelope_c:.3f}")
rep = ineq.l1_l2_check(P4, family, 0.0, 0.5, fit.envelope_c, mu_p4_s, estimate_measure(P4, 0.5, n=60_000, config=cfg, lineage=SeedLineage(19)), config=cfg, lineage=SeedLineage(20))
print(f"  {rep}")
rep = ineq.heat_kernel_sup_check(P4, 0.0, 0.4, fit.envelope_c, mu_p4_s, n=30_000, config=cfg, lineage=SeedLineage(21))
print(f"  {rep}")

print()
print("L2 uniform integrability tails against the (C/r) envelope:")
rep = ineq.uniform_integrability_check(P4, family, 0.0, 1.0, (0.5, 1.0, 2.0, 4.0), mu_p4_s, mu_p4_t, n_inner=800, m_points=96, config=cfg, lineage=SeedLineage(22))
print(f"  {rep}")
print(f"  tails over r: {np.round(rep.details['worst_tails'], 5).tolist()} (nonincreasing: {rep.details['monotone']})")
