"""Estimation of the tight evolution system of measures and integrals against it.

mu_t is realized as the long-time law of the diffusion: dissipativity (r0 < 0)
makes any start forget itself at rate exp(r0 T) under synchronous coupling, so
particles run from time t - T to t.  The coupling bias bound exp(r0 T)|x0| is
recorded in the provenance of every measure.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import McEstimate, PathConfig, SeedLineage, mean_estimate, simulate

MIN_HARNESS_PARTICLES = 1000


@dataclass
class EmpiricalMeasure:
    """Uniformly weighted particle approximation of mu_t."""

    time_tag: float
    particles: np.ndarray  # (n, d)
    burn_in: float
    lineage: SeedLineage
    start_point: np.ndarray
    coupling_bias_bound: float
    shard_size: int = 8192

    @property
    def n(self):
        return self.particles.shape[0]

    @property
    def dimension(self):
        return self.particles.shape[1]

    def expectation(self, f):
        """Particle average of f as a McEstimate (weights are uniform 1/n)."""
        vals = np.asarray(f(self.particles), dtype=float)
        return mean_estimate(vals, self.shard_size)

    def radii(self):
        return np.sqrt((self.particles * self.particles).sum(axis=1))


def default_burn_in(spec):
    """T_min = 10/|r0|: synchronous-coupling contraction factor e^{r0 T} <= e^-10."""
    return 10.0 / abs(spec.r0)


def estimate_measure(spec, t, burn_in=None, n=10_000, config=None, lineage=None, x0=None):
    """Particles of mu_t: terminal states of paths started at t - burn_in.

    burn_in must be at least 10/|r0| (pass a larger value freely); the start
    defaults to the origin, and the synchronous-coupling bias bound
    exp(r0 * burn_in) * |x0| lands in the provenance.
    """
    T_min = default_burn_in(spec)
    T = T_min if burn_in is None else float(burn_in)
    if T < T_min - 1e-12:
        raise ValueError(f"burn-in {T} below T_min = {T_min:.3g} = 10/|r0|")
    if n < MIN_HARNESS_PARTICLES:
        raise ValueError(f"harness measures need at least {MIN_HARNESS_PARTICLES} particles")
    config = config or PathConfig()
    lineage = lineage or SeedLineage(0)
    d = spec.dimension
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    ens = simulate(spec, t - T, t, x0, n, config, lineage)
    particles = ens.states[ens.alive]
    return EmpiricalMeasure(
        time_tag=t,
        particles=particles,
        burn_in=T,
        lineage=lineage,
        start_point=x0,
        coupling_bias_bound=math.exp(spec.r0 * T) * float(np.linalg.norm(x0)),
        shard_size=config.shard_size,
    )


def push_forward(spec, measure, t, config=None, lineage=None):
    """Evolve each particle of a measure at time s to time t (one path each)."""
    config = config or PathConfig()
    lineage = lineage or measure.lineage.child(101)
    ens = simulate(spec, measure.time_tag, t, measure.particles, measure.n, config, lineage)
    return ens


def invariance_residual(spec, f, s, t, n=10_000, config=None, lineage=None, burn_in=None):
    """|int G(t,s)f dmu_t - int f dmu_s| as paired particle averages.

    The left integral uses the push-forward identity: with X_s ~ mu_s evolved to
    X_t, E f(X_t) estimates int G(t,s)f dmu_s-pushed = int G f dmu_t.  Pairing
    the two averages on the same particles makes the difference stderr honest
    and tight.
    """
    lineage = lineage or SeedLineage(0)
    mu_s = estimate_measure(spec, s, burn_in, n, config, lineage)
    pushed = push_forward(spec, mu_s, t, config, lineage.child(11))
    f_end = np.asarray(f(pushed.states), dtype=float)
    f_start = np.asarray(f(mu_s.particles), dtype=float)
    diff = mean_estimate(f_end - f_start, mu_s.shard_size, pushed.alive)
    return McEstimate(abs(diff.value), diff.stderr, diff.n)


def lp_norm(measure, f, p):
    """||f||_{p, mu} = (particle average of |f|^p)^(1/p), delta-method stderr."""
    if p < 1:
        raise ValueError("p must be >= 1")
    vals = np.abs(np.asarray(f(measure.particles), dtype=float))
    if np.all(vals == vals.flat[0]):
        return McEstimate(float(vals.flat[0]), 0.0, vals.size)  # |c| for every p, exactly
    m = mean_estimate(vals ** p, measure.shard_size)
    value = m.value ** (1.0 / p)
    stderr = m.stderr * value ** (1.0 - p) / p if m.value > 0 else 0.0
    return McEstimate(value, stderr, m.n)


@dataclass(frozen=True)
class ExpMomentResult:
    estimate: McEstimate
    diverged: bool
    sweep_values: tuple  # stabilization trace over nested sub-samples

    @property
    def value(self):
        return self.estimate.value


def exp_moment(measure, lam, power=2, truncation_sweep=6, instability=0.2):
    """Particle average of exp(lam |x|^power), overflow-guarded in log space.

    The divergence flag is a documented heuristic: the estimate is recomputed
    over a nested dyadic sweep of sub-samples; at least two doublings each
    moving the value by more than `instability` (relative) flag the moment as
    divergent.  Heavy-tailed-but-finite moments near the integrability
    threshold can trip the flag too, which is the honest direction: their
    plain-average estimators have infinite variance.  Sampling can never prove
    divergence; cross-check analytic thresholds where an oracle exists.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    r = measure.radii()
    expo = lam * r ** power
    M = float(expo.max())
    shifted = np.exp(expo - M)  # in (0, 1]

    def sub_value(k):
        # value over the first n / 2^k particles, in log space
        sub = shifted[: max(2, measure.n >> k)]
        return M + math.log(float(sub.mean()))

    logs = [sub_value(k) for k in range(truncation_sweep, -1, -1)]
    rel_jumps = [abs(b - a) for a, b in zip(logs, logs[1:])]
    # log-scale jump > log(1+instability) ~ relative change > instability
    bar = math.log1p(instability)
    diverged = sum(j > bar for j in rel_jumps) >= 2

    log_value = logs[-1]
    if log_value > 700.0:
        est = McEstimate(math.inf, 0.0, measure.n)
        return ExpMomentResult(est, True, tuple(logs))
    value = math.exp(log_value)
    sub_mean = mean_estimate(shifted, measure.shard_size)
    stderr = math.exp(M) * sub_mean.stderr if M < 700.0 else math.inf
    return ExpMomentResult(McEstimate(value, stderr, measure.n), diverged, tuple(logs))


@dataclass(frozen=True)
class TightnessReport:
    radii: np.ndarray
    min_mass: np.ndarray  # inf over measures of mu(B(0, R)), per radius
    epsilon: float
    radius: Optional[float]  # smallest grid radius achieving 1 - epsilon, or None
    passed: bool

    def __str__(self):
        if self.passed:
            return f"tightness: mass >= {1 - self.epsilon:.4g} inside radius {self.radius:.4g}"
        return f"tightness: FAILED to reach mass {1 - self.epsilon:.4g} on the radii grid"


def tightness_check(measures, epsilon, radii=None):
    """Smallest grid radius R with inf_t mu_t(B(0, R)) >= 1 - epsilon.

    epsilon >= 1 passes trivially at R = 0; epsilon <= 0 is unattainable (full
    mass needs R = infinity) and reports failure.
    """
    if epsilon >= 1.0:
        radii = np.asarray([0.0]) if radii is None else np.asarray(radii, dtype=float)
        return TightnessReport(radii, np.zeros_like(radii), epsilon, 0.0, True)
    if epsilon <= 0.0:
        radii = np.asarray([]) if radii is None else np.asarray(radii, dtype=float)
        return TightnessReport(radii, np.zeros_like(radii), epsilon, None, False)
    all_r = [m.radii() for m in measures]
    if radii is None:
        top = max(float(r.max()) for r in all_r)
        radii = np.linspace(0.0, top, 201)
    radii = np.asarray(radii, dtype=float)
    min_mass = np.ones_like(radii)
    for r in all_r:
        mass = np.searchsorted(np.sort(r), radii, side="right") / r.size
        min_mass = np.minimum(min_mass, mass)
    ok = min_mass >= 1.0 - epsilon
    if not ok.any():
        return TightnessReport(radii, min_mass, epsilon, None, False)
    idx = int(np.argmax(ok))
    return TightnessReport(radii, min_mass, epsilon, float(radii[idx]), True)


def stationary_log_density(spec, grid):
    """Exact stationary log-density of a d=1 time-independent spec on a grid.

    For dX = b(X) dt + sqrt(2q) dW the stationary law is rho ~ exp(int b/q),
    an elementary closed form; available only when drift and diffusion do not
    depend on t (probed) and d = 1.  Normalized by trapezoid quadrature.
    """
    if spec.dimension != 1:
        raise ValueError("stationary density is implemented for d = 1")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    probes = np.array([0.0, 0.37, 1.0])
    b_vals = [spec.drift(t, grid[:, None])[:, 0] for t in probes]
    q_vals = [float(spec.diffusion(t)[0, 0]) for t in probes]
    if not all(np.array_equal(b_vals[0], b) for b in b_vals[1:]) or len(set(q_vals)) != 1:
        raise ValueError("stationary density needs time-independent coefficients")
    integrand = b_vals[0] / q_vals[0]
    # cumulative trapezoid of b/q from the grid start
    steps = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(grid)
    log_unnorm = np.concatenate([[0.0], np.cumsum(steps)])
    log_unnorm -= log_unnorm.max()
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    mass = float(trapezoid(np.exp(log_unnorm), grid))
    return log_unnorm - math.log(mass)


def half_mass_radius(measure, mass):
    """Smallest empirical radius R with mu(B(0, R)) > mass (for Harnack constants)."""
    r = np.sort(measure.radii())
    idx = int(math.floor(mass * r.size)) + 1
    if idx >= r.size:
        raise ValueError("requested mass too close to 1 for the particle count")
    return float(r[idx])
