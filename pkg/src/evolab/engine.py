"""Euler-Maruyama ensemble engine and Monte Carlo estimators for G(t, s).

The diffusion simulated is dX = b(tau, X) dtau + sqrt(2 Q(tau)) dW, whose
generator is Tr(Q D^2) + <b, grad>; the factor 2 under the square root matches
that convention.  Randomness is counter-based: a SeedLineage pins one Philox
stream per shard of paths, so identical lineages give bit-identical ensembles
and disjoint shard ranges can be simulated on any number of workers and merged
deterministically (cross-shard reductions go through math.fsum, which is
exact and hence order-independent).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.random import Generator, Philox

from .errors import BlowupError, DimensionTooHigh
from .operators import diffusion_at, is_superlinear

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedLineage:
    """(master_seed, shard_index, counter) pins every random increment."""

    master_seed: int
    shard_index: int = 0
    counter: int = 0

    def generator(self, shard_offset=0):
        ctr = [0, self.counter & _MASK64, (self.shard_index + shard_offset) & _MASK64, 1]
        return Generator(Philox(counter=ctr, key=[self.master_seed & _MASK64, 0]))

    def child(self, bump):
        """Independent stream family for derived work (burn-in, nesting, ...)."""
        return SeedLineage(self.master_seed, self.shard_index, self.counter + bump)

    def shifted(self, shards):
        return SeedLineage(self.master_seed, self.shard_index + shards, self.counter)


@dataclass(frozen=True)
class PathConfig:
    step_size: float = 1e-3
    scheme: str = "euler-maruyama"
    blowup_guard: float = 1e8
    tame: Optional[bool] = None  # None -> tamed increments iff the drift regime is superlinear
    shard_size: int = 8192
    blowup_budget: float = 0.01

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.scheme != "euler-maruyama":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.shard_size < 2:
            raise ValueError("shard_size must be at least 2")


@dataclass
class Ensemble:
    """Terminal states of n paths plus their Feynman-Kac weights.

    Divergent paths stay in the arrays (to keep shard alignment) but are
    masked out of every estimator via `alive` and counted.
    """

    start_time: float
    start_point: np.ndarray  # (d,) or (n, d) when per-path starts were used
    end_time: float
    states: np.ndarray       # (n, d)
    weights: np.ndarray      # (n,), all 1 when no potential
    alive: np.ndarray        # (n,) bool
    shard_size: int
    lineage: SeedLineage
    spec_digest: str = ""

    @property
    def n(self):
        return self.states.shape[0]

    @property
    def dimension(self):
        return self.states.shape[1]

    @property
    def divergent_count(self):
        return int((~self.alive).sum())


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo value with standard error (sample std / sqrt(n))."""

    value: float
    stderr: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("an estimate needs at least 2 samples")
        if self.stderr < 0 or not math.isfinite(self.stderr):
            raise ValueError("stderr must be finite and nonnegative")

    def __str__(self):
        return f"{self.value:.6g} +- {self.stderr:.2g} (n={self.n})"

    @staticmethod
    def combine(estimates):
        """Pool disjoint-sample estimates of the same quantity."""
        ns = [e.n for e in estimates]
        n = sum(ns)
        value = math.fsum(e.value * e.n for e in estimates) / n
        # pooled second moment about the pooled mean
        ss = math.fsum(
            (e.stderr ** 2 * e.n) * (e.n - 1) + e.n * (e.value - value) ** 2 for e in estimates
        )
        stderr = math.sqrt(ss / max(n - 1, 1)) / math.sqrt(n)
        return McEstimate(value, stderr, n)


# --- deterministic reductions ----------------------------------------------------

def _shard_sum(values, shard_size):
    """Per-shard pairwise sums combined with fsum: exact, order-independent."""
    n = values.shape[0]
    full = (n // shard_size) * shard_size
    parts = []
    if full:
        parts.extend(values[:full].reshape(-1, shard_size).sum(axis=1).tolist())
    if full < n:
        parts.append(float(values[full:].sum()))
    return math.fsum(parts)


def mean_estimate(values, shard_size=8192, alive=None):
    """McEstimate of the mean of `values`, reduced shard-wise.

    Exactly-constant samples short-circuit to (value, stderr 0): constants must
    be preserved bit-for-bit and never pick up rounding noise from the reduction.
    """
    values = np.asarray(values, dtype=float)
    if alive is not None and not alive.all():
        values = values[alive]
    n = values.shape[0]
    if n < 2:
        raise ValueError("need at least 2 live samples")
    first = values.flat[0]
    if np.all(values == first):
        return McEstimate(float(first), 0.0, n)
    total = _shard_sum(values, shard_size)
    mean = total / n
    ss = _shard_sum((values - mean) ** 2, shard_size)
    stderr = math.sqrt(ss / (n - 1)) / math.sqrt(n)
    return McEstimate(mean, stderr, n)


def paired_difference_estimate(a, b, shard_size=8192, alive=None):
    """Estimate of E[a - b] from common-random-number pairs."""
    return mean_estimate(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), shard_size, alive)


# --- simulation -------------------------------------------------------------------

def _sqrt_matrix(Q):
    vals, vecs = np.linalg.eigh(Q)
    if np.any(vals <= 0):
        raise ValueError("diffusion matrix is not positive definite")
    return (vecs * np.sqrt(vals)) @ vecs.T


def _resolve_taming(spec, config):
    if config.tame is not None:
        return config.tame
    return is_superlinear(spec.regime)


def simulate(spec, s, t, x, n, config=None, lineage=None, potential=None):
    """Euler-Maruyama ensemble of n paths of dX = b dt + sqrt(2Q) dW over [s, t].

    x may be a single starting point (d,) or per-path starts (n, d).
    With a potential, weights are exp(-int c) with the integral accumulated by
    left-endpoint quadrature on the simulation grid.  Raises BlowupError when
    more than config.blowup_budget of the paths leave the guard radius.
    """
    if t < s:
        raise ValueError("requires t >= s")
    config = config or PathConfig()
    lineage = lineage or SeedLineage(0)
    spec.certify_window(s, t)
    d = spec.dimension
    x = np.asarray(x, dtype=float)
    per_path_starts = x.ndim == 2
    if per_path_starts and x.shape[0] != n:
        raise ValueError("per-path starts must have shape (n, d)")
    if x.shape[-1] != d:
        raise ValueError(f"starting point must have dimension {d}")

    span = t - s
    n_steps = 0 if span == 0.0 else max(1, int(round(span / config.step_size)))
    h = span / n_steps if n_steps else 0.0
    tame = _resolve_taming(spec, config)

    # cache the noise map when Q does not vary over [s, t]
    probes = [diffusion_at(spec, s + frac * span) for frac in (0.0, 0.5, 1.0)]
    q_constant = all(np.array_equal(probes[0], P) for P in probes[1:])
    const_root = _sqrt_matrix(2.0 * probes[0]) if q_constant else None

    states = np.empty((n, d))
    alive = np.ones(n, dtype=bool)
    csum = np.zeros(n) if potential is not None else None
    guard2 = config.blowup_guard ** 2

    shard = config.shard_size
    n_shards = (n + shard - 1) // shard

    def run_shard(j):
        lo, hi = j * shard, min((j + 1) * shard, n)
        m = hi - lo
        rng = lineage.generator(j)
        X = x[lo:hi].copy() if per_path_starts else np.broadcast_to(x, (m, d)).copy()
        ok = np.ones(m, dtype=bool)
        cacc = np.zeros(m) if potential is not None else None
        for k in range(n_steps):
            tau = s + k * h
            if potential is not None:
                cacc += np.where(ok, np.asarray(potential.c(tau, X), dtype=float), 0.0)
            with np.errstate(over="ignore", invalid="ignore"):
                b = spec.drift(tau, X)
                if tame:
                    bn = np.sqrt((b * b).sum(axis=1, keepdims=True))
                    b = b / (1.0 + h * bn)
                root = const_root if q_constant else _sqrt_matrix(2.0 * diffusion_at(spec, tau))
                Z = rng.standard_normal((m, d))
                Xn = X + h * b + math.sqrt(h) * (Z @ root.T)
                bad = ~np.isfinite(Xn).all(axis=1) | ((Xn * Xn).sum(axis=1) > guard2)
            newly = ok & bad
            if newly.any():
                ok &= ~newly
            Xn[~ok] = X[~ok]  # parked at their last in-guard state
            X = Xn
        states[lo:hi] = X
        alive[lo:hi] = ok
        if potential is not None:
            csum[lo:hi] = cacc

    # shards write disjoint slices and own independent streams: results do not
    # depend on scheduling, so worker count is purely a throughput knob
    workers = int(os.environ.get("EVOLAB_THREADS", "1"))
    if workers > 1 and n_shards > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_shard, range(n_shards)))
    else:
        for j in range(n_shards):
            run_shard(j)

    divergent = int((~alive).sum())
    if divergent > config.blowup_budget * n:
        raise BlowupError(
            f"{divergent}/{n} paths diverged; reduce the step size or check dissipativity",
            divergent,
            n,
        )
    if potential is not None and n_steps > 0:
        weights = np.exp(-(csum / n_steps) * span)
    else:
        weights = np.ones(n)
    return Ensemble(
        start_time=s,
        start_point=x.copy(),
        end_time=t,
        states=states,
        weights=weights,
        alive=alive,
        shard_size=shard,
        lineage=lineage,
        spec_digest=spec.digest(),
    )


def merge_ensembles(a, b):
    """Concatenate two ensembles from disjoint shard ranges of the same run."""
    if a.shard_size != b.shard_size or a.end_time != b.end_time or a.start_time != b.start_time:
        raise ValueError("ensembles are not merge-compatible")
    return Ensemble(
        start_time=a.start_time,
        start_point=a.start_point,
        end_time=a.end_time,
        states=np.vstack([a.states, b.states]),
        weights=np.concatenate([a.weights, b.weights]),
        alive=np.concatenate([a.alive, b.alive]),
        shard_size=a.shard_size,
        lineage=a.lineage,
        spec_digest=a.spec_digest,
    )


# --- estimators --------------------------------------------------------------------

def evaluate_on(ensemble, f):
    """f over terminal states, weighted; returns the per-path sample array."""
    vals = np.asarray(f(ensemble.states), dtype=float)
    if vals.shape != (ensemble.n,):
        raise ValueError("test functions must map (n, d) states to (n,) values")
    if np.all(ensemble.weights == 1.0):
        return vals
    return vals * ensemble.weights


def apply_to(ensemble, f):
    """McEstimate of the (weighted) ensemble mean of f."""
    return mean_estimate(evaluate_on(ensemble, f), ensemble.shard_size, ensemble.alive)


def apply(spec, f, s, t, x, n, config=None, lineage=None):
    """McEstimate of (G(t, s) f)(x) by plain Monte Carlo over terminal states."""
    ens = simulate(spec, s, t, x, n, config, lineage)
    return apply_to(ens, f)


def gradient_apply(spec, f, s, t, x, n, config=None, lineage=None, h_scale=1e-4):
    """Central-difference estimate of (grad_x G(t, s) f)(x), one McEstimate per
    coordinate.  Both sides of each difference ride on identical noise (common
    random numbers), so the difference variance collapses."""
    x = np.asarray(x, dtype=float)
    d = spec.dimension
    h = h_scale * (1.0 + float(np.linalg.norm(x)))
    out = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        plus = simulate(spec, s, t, x + e, n, config, lineage)
        minus = simulate(spec, s, t, x - e, n, config, lineage)
        vals = (evaluate_on(plus, f) - evaluate_on(minus, f)) / (2.0 * h)
        out.append(mean_estimate(vals, plus.shard_size, plus.alive & minus.alive))
    return out


def backward_derivative_check(spec, f, s, t, x, n, config=None, lineage=None, delta=1e-3):
    """|d/ds G(t,s)f + G(t,s) A(s) f| by centered differences in s (CRN).

    f must expose gradient(x) and hessian(x); returns the residual McEstimate.
    """
    if t - s <= 2.0 * delta:
        raise ValueError("window too small: need t - s > 2*delta")
    plus = simulate(spec, s + delta, t, x, n, config, lineage)
    minus = simulate(spec, s - delta, t, x, n, config, lineage)
    fd_vals = (evaluate_on(plus, f) - evaluate_on(minus, f)) / (2.0 * delta)
    fd = mean_estimate(fd_vals, plus.shard_size, plus.alive & minus.alive)

    Q = diffusion_at(spec, s)

    def Af(pts):
        pts = np.atleast_2d(pts)
        grads = f.gradient(pts)            # (n, d)
        hessians = f.hessian(pts)          # (n, d, d)
        drift_term = (spec.drift(s, pts) * grads).sum(axis=1)
        trace_term = np.einsum("ij,nji->n", Q, hessians)
        return trace_term + drift_term

    mid = simulate(spec, s, t, x, n, config, lineage)
    g_af = apply_to(mid, Af)
    residual = abs(fd.value + g_af.value)
    stderr = math.sqrt(fd.stderr ** 2 + g_af.stderr ** 2)
    return McEstimate(residual, stderr, min(fd.n, g_af.n))


def feynman_kac_apply(spec, potential, f, s, t, x, n, config=None, lineage=None):
    """McEstimate of (G_c(t, s) f)(x): mean of f(X_t) exp(-int_s^t c(tau, X_tau) dtau)."""
    ens = simulate(spec, s, t, x, n, config, lineage, potential=potential)
    return apply_to(ens, f)


def chapman_kolmogorov_check(spec, f, s, r, t, x, n, config=None, lineage=None, n_outer=256):
    """|G(t,s)f - G(t,r)[G(r,s)f]| with the nested value from sub-ensembles."""
    if not s < r < t:
        raise ValueError("requires s < r < t")
    lineage = lineage or SeedLineage(0)
    direct = apply(spec, f, s, t, x, n, config, lineage)
    outer = simulate(spec, s, r, x, n_outer, config, lineage.child(1))
    n_inner = max(2, n // n_outer)
    starts = np.repeat(outer.states, n_inner, axis=0)
    inner = simulate(spec, r, t, starts, n_outer * n_inner, config, lineage.child(2))
    alive = inner.alive & np.repeat(outer.alive, n_inner)
    nested = mean_estimate(evaluate_on(inner, f), inner.shard_size, alive)
    residual = abs(direct.value - nested.value)
    stderr = math.sqrt(direct.stderr ** 2 + nested.stderr ** 2)
    return McEstimate(residual, stderr, min(direct.n, nested.n))


# --- kernel density estimation -------------------------------------------------------

@dataclass(frozen=True)
class DensityEstimate:
    """Gaussian-kernel density estimate of the transition kernel g_{t,s}(x, .)."""

    query: np.ndarray       # (m, d) evaluation points
    density: np.ndarray     # (m,) estimated values
    bandwidth: np.ndarray   # (d,) per-coordinate bandwidths
    sup: float              # max over the query grid
    sup_biased_by_bandwidth: bool  # KDE sup is bandwidth-smoothed; flag the caveat
    mass: Optional[float]   # trapezoid integral over the grid (d = 1 only)


def silverman_bandwidth(samples):
    """Per-coordinate Silverman rule-of-thumb bandwidths for (n, d) samples."""
    X = np.atleast_2d(samples)
    n, d = X.shape
    out = np.empty(d)
    for i in range(d):
        col = X[:, i]
        s = float(np.std(col))
        q75, q25 = np.percentile(col, [75, 25])
        a = min(s, (q75 - q25) / 1.34) if q75 > q25 else s
        if a == 0.0:
            a = max(s, 1e-12)
        if d == 1:
            out[i] = 0.9 * a * n ** (-0.2)
        else:
            out[i] = a * (4.0 / (d + 2.0)) ** (1.0 / (d + 4.0)) * n ** (-1.0 / (d + 4.0))
    return out


def kde_evaluate(samples, query, bandwidth, block=8192):
    """Product-Gaussian KDE of `samples` (n, d) at `query` (m, d)."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    Y = np.atleast_2d(np.asarray(query, dtype=float))
    bw = np.broadcast_to(np.asarray(bandwidth, dtype=float), (X.shape[1],))
    norm = X.shape[0] * np.prod(bw * math.sqrt(2.0 * math.pi))
    out = np.zeros(Y.shape[0])
    for i in range(0, X.shape[0], block):
        blk = X[i : i + block]
        z = (Y[None, :, :] - blk[:, None, :]) / bw
        out += np.exp(-0.5 * (z * z).sum(axis=2)).sum(axis=0)
    return out / norm


def kernel_density(spec, s, t, x, n, config=None, lineage=None, query=None, bandwidth=None, grid_points=241, pad=4.0):
    """KDE of the transition kernel g_{t,s}(x, .) on a query grid, with sup.

    Supported for dimension <= 3 (the curse of dimensionality makes KDE sups
    meaningless beyond that).  Bandwidth defaults to Silverman's rule.
    """
    if spec.dimension > 3:
        raise DimensionTooHigh("kernel density estimation supports d <= 3")
    ens = simulate(spec, s, t, x, n, config, lineage)
    pts = ens.states[ens.alive]
    bw = np.asarray(bandwidth, dtype=float).reshape(-1) if bandwidth is not None else silverman_bandwidth(pts)
    if bw.size == 1 and spec.dimension > 1:
        bw = np.repeat(bw, spec.dimension)
    if query is None:
        if spec.dimension == 1:
            lo = pts[:, 0].min() - pad * bw[0]
            hi = pts[:, 0].max() + pad * bw[0]
            query = np.linspace(lo, hi, grid_points)[:, None]
        else:
            axes = [
                np.linspace(pts[:, i].min() - pad * bw[i], pts[:, i].max() + pad * bw[i], max(9, int(round(grid_points ** (1 / spec.dimension)))))
                for i in range(spec.dimension)
            ]
            mesh = np.meshgrid(*axes, indexing="ij")
            query = np.stack([m.ravel() for m in mesh], axis=1)
    query = np.atleast_2d(np.asarray(query, dtype=float))
    dens = kde_evaluate(pts, query, bw)
    mass = None
    if spec.dimension == 1:
        order = np.argsort(query[:, 0])
        trapezoid = getattr(np, "trapezoid", None) or np.trapz
        mass = float(trapezoid(dens[order], query[order, 0]))
    return DensityEstimate(
        query=query,
        density=dens,
        bandwidth=bw,
        sup=float(dens.max()),
        sup_biased_by_bandwidth=True,
        mass=mass,
    )
