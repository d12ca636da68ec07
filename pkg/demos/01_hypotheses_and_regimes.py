"""Verify the standing hypotheses of an operator family and classify its drift.

Walks through: ellipticity of Q(t), dissipativity of the drift Jacobian,
Lyapunov domination for the built-in profile families, and the drift-regime
classifier that sorts operators into the smoothing ladder
(supercontractive <= ultrabounded <= ultracontractive).

Run:  python demos/01_hypotheses_and_regimes.py
"""

import numpy as np

from evolab import presets
from evolab.expressions import parse_drift_expression
from evolab.operators import (
    LyapunovSpec,
    OperatorSpec,
    QuadraticFamily,
    check_dissipativity,
    check_ellipticity,
    check_lyapunov,
    classify_regime,
    dissipativity_samples,
    make_annulus_grid,
)

print("=" * 72)
print("1. Ellipticity: Q(t) = diag(1, 2 + sin t) against claimed bounds")
print("=" * 72)


def diffusion(t):
    return np.diag([1.0, 2.0 + np.sin(t)])


def make_spec(Lambda):
    return OperatorSpec(
        dimension=2, diffusion=diffusion, drift=lambda t, x: -np.asarray(x),
        eta0=1.0, Lambda=Lambda, r0=-1.0, time_window=(-100, 100),
    )


tgrid = np.linspace(0.0, 2 * np.pi, 41)
print("claim Lambda = 3.0:", check_ellipticity(make_spec(3.0), tgrid))
print("claim Lambda = 2.5:", check_ellipticity(make_spec(2.5), tgrid))

print()
print("=" * 72)
print("2. Dissipativity: is <J_b xi, xi> <= r0 |xi|^2 really satisfied?")
print("=" * 72)
samples = dissipativity_samples(1, seed=0)
for source in ("-x1", "-x1^3", "-x1 - x1^3"):
    drift = parse_drift_expression(source, 1)
    spec = OperatorSpec(
        dimension=1, diffusion=lambda t: np.eye(1), drift=drift,
        eta0=1.0, Lambda=1.0, r0=-1.0, time_window=(-100, 100),
    )
    rep = check_dissipativity(spec, samples + [(0.0, np.zeros(1), np.ones(1))])
    print(f"b = {source:12s} claimed r0 = -1:", rep)

print()
print("=" * 72)
print("3. Lyapunov profiles: A(t) phi <= a - gamma phi")
print("=" * 72)
cubic = OperatorSpec(
    dimension=1, diffusion=lambda t: np.eye(1),
    drift=parse_drift_expression("-x1^3", 1),
    eta0=1.0, Lambda=1.0, r0=-1.0, time_window=(-100, 100),
)
lyap = LyapunovSpec(generator_bound=(0.5, 0.2), family=QuadraticFamily(0.1))
grid = np.linspace(-10, 10, 81)[:, None]
print("exp(0.1 x^2) under b = -x^3:", check_lyapunov(cubic, lyap, grid))

print()
print("=" * 72)
print("4. Drift-regime classification on an annulus grid")
print("=" * 72)
annulus = make_annulus_grid(1, r_min=2.0, r_max=50.0, n_radii=14)
cases = [
    ("-x1^3", "pure cubic"),
    ("-x1*log(1+x1^2)^2", "log-squared"),
    ("-x1", "Ornstein-Uhlenbeck"),
]
for source, label in cases:
    drift = parse_drift_expression(source, 1)
    spec = OperatorSpec(
        dimension=1, diffusion=lambda t: np.eye(1), drift=drift,
        eta0=1.0, Lambda=1.0, r0=-1.0, time_window=(-100, 100),
    )
    cls = classify_regime(spec, annulus)
    tag = type(cls.regime).__name__ if cls.regime is not None else "Unclassified"
    print(f"b = {source:22s} ({label:20s}) -> {tag:16s} implies {cls.implied}")

print()
print("built-in preset catalog:")
for entry in presets.catalog():
    print(f"  {entry['name']:10s} {entry['regime']:18s} {entry['note']}")
