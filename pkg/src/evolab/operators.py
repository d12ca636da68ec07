"""Operator families Tr(Q(t) D^2) + <b(t,x), grad> and their standing hypotheses.

An OperatorSpec packages the coefficients together with the claimed structural
constants (ellipticity window [eta0, Lambda], dissipativity constant r0 < 0)
and an optional drift-regime tag.  The check_* functions verify each claim on
user-supplied sample grids and report the worst slack; certification is
sample-based by design, with grid density a caller knob.
"""

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainEvalError, NotConvex, SymmetryViolation, TailNotIntegrable

# --- regime tags ---------------------------------------------------------------

@dataclass(frozen=True)
class Hyper:
    """<b(t,x), x> <= -k1 |x|^2 log|x| outside B(0, radius)."""

    k1: float
    radius: float = 2.0


@dataclass(frozen=True)
class Ultrabounded:
    """<b(t,x), x> <= -k2 |x|^2 (log|x|)^alpha, alpha > 1, outside B(0, radius)."""

    k2: float
    alpha: float
    radius: float = 2.0

    def __post_init__(self):
        if self.alpha <= 1:
            raise ValueError("Ultrabounded needs alpha > 1")


@dataclass(frozen=True)
class Ultracontractive:
    """<b(t,x), x> <= -k3 |x|^kappa, kappa > 2, outside B(0, radius)."""

    k3: float
    kappa: float
    radius: float = 2.0

    def __post_init__(self):
        if self.kappa <= 2:
            raise ValueError("Ultracontractive needs kappa > 2")


def implied_properties(regime):
    """Smoothing properties implied by a regime tag, strongest first."""
    if isinstance(regime, Ultracontractive):
        return ("ultracontractive", "ultrabounded", "supercontractive")
    if isinstance(regime, Ultrabounded):
        return ("ultrabounded", "supercontractive")
    if isinstance(regime, Hyper):
        return ("supercontractive",)
    return ()


def is_superlinear(regime):
    return isinstance(regime, (Ultrabounded, Ultracontractive))


# --- core types ------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSpec:
    dimension: int
    diffusion: Callable  # t -> symmetric (d, d) matrix
    drift: Callable      # (t, x[..., d]) -> vector field, vectorized over points
    drift_jacobian: Optional[Callable] = None  # (t, x[d]) -> (d, d); else central FD
    eta0: float = 1.0
    Lambda: float = 1.0
    r0: float = -1.0
    regime: object = None
    time_window: tuple = (0.0, 1e6)
    name: str = ""
    drift_source: str = ""  # canonical text of the drift, for provenance hashing

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if not 0 < self.eta0 <= self.Lambda:
            raise ValueError("need 0 < eta0 <= Lambda")
        if self.r0 >= 0:
            raise ValueError("dissipativity constant r0 must be negative")
        if not self.time_window[0] < self.time_window[1]:
            raise ValueError("empty time window")

    def certify_window(self, s, t):
        lo, hi = self.time_window
        if not (lo <= s <= t <= hi):
            raise ValueError(f"[{s}, {t}] outside certified window [{lo}, {hi}]")

    def jacobian_at(self, t, x, h_scale=1e-5):
        """Analytic Jacobian if supplied, else central differences h = 1e-5 (1+|x|)."""
        x = np.asarray(x, dtype=float)
        if self.drift_jacobian is not None:
            return np.asarray(self.drift_jacobian(t, x), dtype=float)
        d = self.dimension
        h = h_scale * (1.0 + float(np.linalg.norm(x)))
        J = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            J[:, j] = (self.drift(t, x + e) - self.drift(t, x - e)) / (2.0 * h)
        return J

    def digest(self):
        payload = "|".join(
            [
                self.name,
                str(self.dimension),
                self.drift_source or "<opaque drift>",
                repr((self.eta0, self.Lambda, self.r0)),
                repr(self.regime),
                repr(self.time_window),
            ]
        )
        return hashlib.sha256(payload.encode()).hexdigest()


SYMMETRY_TOL = 1e-12


def diffusion_at(spec, t):
    """Q(t) with the symmetry invariant enforced (tolerance 1e-12)."""
    Q = np.asarray(spec.diffusion(t), dtype=float)
    if Q.shape != (spec.dimension, spec.dimension):
        raise ValueError(f"diffusion must return a {spec.dimension}x{spec.dimension} matrix")
    scale = max(1.0, float(np.abs(Q).max()))
    if np.abs(Q - Q.T).max() > SYMMETRY_TOL * scale:
        raise SymmetryViolation(f"Q({t}) is not symmetric within {SYMMETRY_TOL}")
    return 0.5 * (Q + Q.T)


# --- Lyapunov families ------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticFamily:
    """phi(x) = exp(lam |x|^2)."""

    lam: float


@dataclass(frozen=True)
class LogPowerFamily:
    """phi(x) = exp(lam |x|^2 (log |x|^2)^delta), valid outside B(0, radius)."""

    lam: float
    delta: float
    radius: float = 2.0


@dataclass(frozen=True)
class PowerExpFamily:
    """phi(x) = exp(delta |x|^kappa)."""

    delta: float
    kappa: float


@dataclass(frozen=True)
class LyapunovSpec:
    generator_bound: tuple  # (a, gamma), both positive
    family: object = None   # one of the families above, or None for a custom phi
    phi: Optional[Callable] = None  # required when family is None

    def __post_init__(self):
        a, gamma = self.generator_bound
        if a <= 0 or gamma <= 0:
            raise ValueError("generator bound constants must be positive")
        if self.family is None and self.phi is None:
            raise ValueError("custom Lyapunov spec needs an explicit phi")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        v = (x * x).sum(axis=-1)
        fam = self.family
        if isinstance(fam, QuadraticFamily):
            return np.exp(fam.lam * v)
        if isinstance(fam, LogPowerFamily):
            if np.any(v <= max(1.0, fam.radius ** 2) - 1e-12):
                raise DomainEvalError("log-power Lyapunov family needs |x| > radius")
            return np.exp(fam.lam * v * np.log(v) ** fam.delta)
        if isinstance(fam, PowerExpFamily):
            return np.exp(fam.delta * v ** (0.5 * fam.kappa))
        return np.asarray(self.phi(x), dtype=float)


def _radial_profile(family):
    """g, g', g'' with phi = exp(g(v)), v = |x|^2, for the built-in families."""
    if isinstance(family, QuadraticFamily):
        lam = family.lam
        return (lambda v: lam * v, lambda v: lam * np.ones_like(v), lambda v: np.zeros_like(v))
    if isinstance(family, LogPowerFamily):
        lam, de = family.lam, family.delta

        def g(v):
            return lam * v * np.log(v) ** de

        def g1(v):
            L = np.log(v)
            return lam * (L ** de + de * L ** (de - 1.0))

        def g2(v):
            L = np.log(v)
            return lam * de * (L ** (de - 1.0) + (de - 1.0) * L ** (de - 2.0)) / v

        return g, g1, g2
    if isinstance(family, PowerExpFamily):
        de, ka = family.delta, family.kappa

        def g(v):
            return de * v ** (0.5 * ka)

        def g1(v):
            return de * 0.5 * ka * v ** (0.5 * ka - 1.0)

        def g2(v):
            return de * 0.5 * ka * (0.5 * ka - 1.0) * v ** (0.5 * ka - 2.0)

        return g, g1, g2
    raise ValueError(f"no radial profile for {family!r}")


def generator_ratio_radial_exp(spec, family, t, x):
    """(A(t) phi / phi, log phi) at points x for phi = exp(g(|x|^2)).

    A phi / phi = 4 g'(v)^2 <Qx,x> + 2 g'(v) Tr Q + 4 g''(v) <Qx,x> + 2 g'(v) <b,x>;
    working with the ratio keeps exponential profiles overflow-safe.
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    Q = diffusion_at(spec, t)
    v = (X * X).sum(axis=1)
    if isinstance(family, LogPowerFamily) and np.any(v <= max(1.0, family.radius ** 2) - 1e-12):
        raise DomainEvalError("log-power Lyapunov family needs |x| > radius")
    g, g1, g2 = _radial_profile(family)
    qxx = np.einsum("ni,ij,nj->n", X, Q, X)
    bx = (spec.drift(t, X) * X).sum(axis=1)
    ratio = 4.0 * g1(v) ** 2 * qxx + 2.0 * g1(v) * np.trace(Q) + 4.0 * g2(v) * qxx + 2.0 * g1(v) * bx
    return ratio, g(v)


def generator_on_radial_exp(spec, family, t, x):
    """A(t) phi at points x for phi = exp(g(|x|^2)); overflows for huge profiles."""
    ratio, log_phi = generator_ratio_radial_exp(spec, family, t, x)
    return ratio * np.exp(log_phi)


def generator_on_function(spec, f, grad, hess, t, x):
    """A(t) f at a single point from explicit gradient/hessian callables."""
    x = np.asarray(x, dtype=float)
    Q = diffusion_at(spec, t)
    H = np.asarray(hess(x), dtype=float)
    g = np.asarray(grad(x), dtype=float)
    return float(np.trace(Q @ H) + float(spec.drift(t, x) @ g))


def _fd_hessian(phi, x, h_scale=1e-4):
    x = np.asarray(x, dtype=float)
    d = x.size
    h = h_scale * (1.0 + float(np.linalg.norm(x)))
    H = np.empty((d, d))
    f0 = float(phi(x))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        H[i, i] = (float(phi(x + ei)) - 2.0 * f0 + float(phi(x - ei))) / h ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            H[i, j] = H[j, i] = (
                float(phi(x + ei + ej)) - float(phi(x + ei - ej))
                - float(phi(x - ei + ej)) + float(phi(x - ei - ej))
            ) / (4.0 * h ** 2)
    return H


def _fd_gradient(phi, x, h_scale=1e-5):
    x = np.asarray(x, dtype=float)
    d = x.size
    h = h_scale * (1.0 + float(np.linalg.norm(x)))
    g = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        g[i] = (float(phi(x + e)) - float(phi(x - e))) / (2.0 * h)
    return g


# --- potentials -------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """Zeroth-order coefficient c(t, x) with certified infimum c0."""

    c: Callable  # (t, x[..., d]) -> scalar field, vectorized
    c0: float
    source: str = ""

    def check_bound(self, sample_points):
        worst = -math.inf
        for t, x in sample_points:
            val = float(np.min(self.c(t, np.atleast_2d(np.asarray(x, dtype=float)))))
            worst = max(worst, self.c0 - val)
        return worst <= 1e-12


# --- hypothesis reports -------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisReport:
    name: str
    passed: bool
    worst_slack: float  # signed: positive means the claim is violated by this much
    tol: float
    details: dict = field(default_factory=dict)

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst slack {self.worst_slack:.3e} (tol {self.tol:.1e})"


DEFAULT_ABS_TOL = 1e-8
DEFAULT_REL_TOL = 1e-8


def check_ellipticity(spec, time_grid, direction_samples=None, tol=None):
    """Rayleigh quotients of Q(t) over unit directions against [eta0, Lambda]."""
    if direction_samples is None:
        direction_samples = unit_directions(spec.dimension, 16, seed=0)
    dirs = np.atleast_2d(np.asarray(direction_samples, dtype=float))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = dirs / norms
    tol = 1e-10 * spec.Lambda if tol is None else tol
    qmin, qmax = math.inf, -math.inf
    for t in np.atleast_1d(time_grid):
        spec.certify_window(t, t)
        Q = diffusion_at(spec, float(t))
        quot = np.einsum("ni,ij,nj->n", dirs, Q, dirs)
        qmin = min(qmin, float(quot.min()))
        qmax = max(qmax, float(quot.max()))
    slack = max(spec.eta0 - qmin, qmax - spec.Lambda)
    return HypothesisReport(
        name="ellipticity",
        passed=slack <= tol,
        worst_slack=slack,
        tol=tol,
        details={"min_quotient": qmin, "max_quotient": qmax},
    )


def check_dissipativity(spec, sample_points, tol=None):
    """max <J_b(t,x) xi, xi>/|xi|^2 against r0, plus the radial consequence
    <b(t,x), x> <= ||b(.,0)||_inf |x| + r0 |x|^2."""
    tol = DEFAULT_ABS_TOL + DEFAULT_REL_TOL * abs(spec.r0) if tol is None else tol
    worst_quot = -math.inf
    argworst = None
    times = sorted({float(t) for t, _, _ in sample_points})
    b0 = max(float(np.linalg.norm(spec.drift(t, np.zeros(spec.dimension)))) for t in times)
    radial_slack = -math.inf
    for t, x, xi in sample_points:
        xi = np.asarray(xi, dtype=float)
        n2 = float(xi @ xi)
        if n2 == 0.0:
            raise ValueError("directions xi must be nonzero")
        J = spec.jacobian_at(t, x)
        quot = float(xi @ J @ xi) / n2
        if quot > worst_quot:
            worst_quot, argworst = quot, (float(t), np.asarray(x, dtype=float).tolist())
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        bx = float(spec.drift(t, x) @ x)
        radial_slack = max(radial_slack, bx - (b0 * r + spec.r0 * r * r))
    slack = worst_quot - spec.r0
    return HypothesisReport(
        name="dissipativity",
        passed=slack <= tol and radial_slack <= tol * (1.0 + b0),
        worst_slack=slack,
        tol=tol,
        details={
            "max_quotient": worst_quot,
            "argmax": argworst,
            "radial_slack": radial_slack,
            "drift_at_origin_sup": b0,
        },
    )


def check_lyapunov(spec, lyap, annulus_grid, time_grid=(0.0,), tol=None):
    """A(t) phi <= a - gamma phi on the grid; built-in families use analytic
    derivatives, custom phi second-order central differences h = 1e-4 (1+|x|).

    The slack is reported relative to phi (the inequality divided by phi > 0),
    which keeps exponential profiles overflow-safe: worst_slack =
    max (A phi/phi + gamma - a/phi)."""
    a, gamma = lyap.generator_bound
    tol = DEFAULT_ABS_TOL + DEFAULT_REL_TOL * a if tol is None else tol
    pts = np.atleast_2d(np.asarray(annulus_grid, dtype=float))
    worst = -math.inf
    argworst = None
    for t in np.atleast_1d(time_grid):
        t = float(t)
        if lyap.family is not None:
            ratio, log_phi = generator_ratio_radial_exp(spec, lyap.family, t, pts)
            inv_phi = np.where(log_phi < 700.0, np.exp(-log_phi), 0.0)
        else:
            Aphi = np.array(
                [
                    generator_on_function(
                        spec, lyap.phi, lambda y: _fd_gradient(lyap.phi, y), lambda y: _fd_hessian(lyap.phi, y), t, p
                    )
                    for p in pts
                ]
            )
            phiv = np.array([float(lyap.phi(p)) for p in pts])
            if np.any(phiv <= 0):
                raise ValueError("Lyapunov phi must be positive on the grid")
            ratio = Aphi / phiv
            inv_phi = 1.0 / phiv
        slack = ratio + gamma - a * inv_phi
        k = int(np.argmax(slack))
        if slack[k] > worst:
            worst = float(slack[k])
            argworst = (t, pts[k].tolist())
    return HypothesisReport(
        name="lyapunov",
        passed=worst <= tol,
        worst_slack=worst,
        tol=tol,
        details={"argmax": argworst, "a": a, "gamma": gamma},
    )


def check_convex_lyapunov(spec, lam, h_lambda, R, annulus_grid=None, time_grid=(0.0,), tol=None):
    """A(t) phi_lam <= -h_lam(phi_lam) for |x| >= R, with phi_lam = exp(lam |x|^2).

    h_lambda must be convex increasing on [0, inf) (sampled on a geometric grid)
    and 1/h_lambda integrable at +inf (numerical tail quadrature).
    """
    _check_convex_increasing(h_lambda)
    _check_tail_integrable(h_lambda)
    tol = DEFAULT_ABS_TOL if tol is None else tol
    fam = QuadraticFamily(lam)
    if annulus_grid is None:
        annulus_grid = make_annulus_grid(spec.dimension, r_min=R, r_max=max(4.0 * R, 10.0))
    pts = np.atleast_2d(np.asarray(annulus_grid, dtype=float))
    keep = np.linalg.norm(pts, axis=1) >= R - 1e-12
    pts = pts[keep]
    if pts.size == 0:
        raise ValueError("annulus grid has no points with |x| >= R")
    if lam * float((pts * pts).sum(axis=1).max()) > 700.0:
        raise ValueError("grid reaches exp overflow for this lam; shrink the annulus")
    worst = -math.inf
    argworst = None
    for t in np.atleast_1d(time_grid):
        t = float(t)
        ratio, log_phi = generator_ratio_radial_exp(spec, fam, t, pts)
        phiv = np.exp(log_phi)
        hv = np.array([float(h_lambda(p)) for p in phiv])
        slack = ratio + hv / phiv  # A phi <= -h(phi), divided by phi > 0
        k = int(np.argmax(slack))
        if slack[k] > worst:
            worst = float(slack[k])
            argworst = (t, pts[k].tolist())
    return HypothesisReport(
        name="convex_lyapunov",
        passed=worst <= tol,
        worst_slack=worst,
        tol=tol,
        details={"argmax": argworst, "lam": lam, "R": R},
    )


def _check_convex_increasing(h, lo=1e-2, hi=1e10, n=41, rel_tol=1e-9):
    ys = np.geomspace(lo, hi, n)
    vals = np.array([float(h(y)) for y in ys])
    scale = 1.0 + np.abs(vals).max()
    if np.any(np.diff(vals) < -rel_tol * scale):
        raise NotConvex("h_lambda is not nondecreasing on the sampled grid")
    for i in range(n - 2):
        a, b = ys[i], ys[i + 2]
        mid = 0.5 * (a + b)
        chord = 0.5 * (vals[i] + vals[i + 2])
        local = 1.0 + abs(vals[i]) + abs(vals[i + 2])
        if float(h(mid)) > chord + 1e-9 * local:
            raise NotConvex("h_lambda failed midpoint convexity on the sampled grid")


def _check_tail_integrable(h, blocks=12, nodes=65):
    """Integrate 1/h over geometric blocks [c 4^k, c 4^(k+1)]; integrable iff the
    block increments decay fast enough (geometric, or polynomial with rate > 1.25)."""
    # first grid point where h > 0
    c = None
    for y in np.geomspace(1.0, 1e8, 33):
        if float(h(y)) > 0:
            c = y
            break
    if c is None:
        raise TailNotIntegrable("h_lambda never becomes positive on the probe grid")
    increments = []
    for k in range(blocks):
        lo, hi = c * 4.0 ** k, c * 4.0 ** (k + 1)
        u = np.linspace(math.log(lo), math.log(hi), nodes)
        y = np.exp(u)
        fy = np.array([float(h(v)) for v in y])
        if np.any(fy <= 0):
            raise TailNotIntegrable("h_lambda nonpositive inside the tail")
        integrand = y / fy  # d y / h = y/h d(log y)
        from scipy.integrate import simpson

        increments.append(float(simpson(integrand, x=u)))
    inc = np.array(increments)
    if inc[-1] < 1e-12 * (1.0 + inc[0]):
        return  # tail already negligible
    ratio = inc[-1] / inc[-2]
    if ratio < 0.7:
        return  # geometric decay, comfortably summable
    ks = np.arange(blocks - 4, blocks) + 1.0
    tail = inc[-4:]
    if np.any(tail <= 0):
        return
    p = -np.polyfit(np.log(ks), np.log(tail), 1)[0]
    if p <= 1.25:
        raise TailNotIntegrable(
            f"1/h_lambda tail increments decay like k^-{p:.2f}; not summable"
        )


# --- regime classification ------------------------------------------------------------

@dataclass(frozen=True)
class RegimeClassification:
    regime: object  # Hyper | Ultrabounded | Ultracontractive | None
    implied: tuple
    diagnostics: dict

    def __str__(self):
        tag = type(self.regime).__name__ if self.regime is not None else "Unclassified"
        return f"{tag} {self.diagnostics}"


def _ls_slope(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(sol[0]), float(sol[1])


def classify_regime(spec, annulus_grid, time_grid=(0.0,), stability_tol=0.25, margin=0.1):
    """Strongest drift condition holding on the grid, with fitted constants.

    Exponents are fitted by least squares on the radial profile of <b,x>;
    a fit is accepted only when the inner-half and outer-half slopes agree
    within stability_tol (guards against mistaking log corrections for powers).
    K constants are fitted by minimizing slack over the grid.
    """
    pts = np.atleast_2d(np.asarray(annulus_grid, dtype=float))
    radii = np.linalg.norm(pts, axis=1)
    if np.any(radii <= 1.0):
        raise ValueError("annulus grid must satisfy |x| > 1")
    s_worst = np.full(len(pts), -math.inf)
    for t in np.atleast_1d(time_grid):
        bx = (spec.drift(float(t), pts) * pts).sum(axis=1)
        s_worst = np.maximum(s_worst, bx)
    diagnostics = {}
    if np.any(s_worst >= 0):
        diagnostics["note"] = "<b,x> nonnegative somewhere on the grid"
        return RegimeClassification(None, (), diagnostics)

    order = np.argsort(radii)
    radii, s_worst = radii[order], s_worst[order]
    logr = np.log(radii)
    neg = -s_worst
    half = len(radii) // 2

    def stable_fit(y):
        full, _ = _ls_slope(logr, y)
        inner, _ = _ls_slope(logr[:half], y[:half])
        outer, _ = _ls_slope(logr[half:], y[half:])
        return full, abs(inner - outer)

    kappa_fit, kappa_spread = stable_fit(np.log(neg))
    # alpha fit regresses the log-corrected profile against log log |x|
    loglogr = np.log(logr)
    y_alpha = np.log(neg / radii ** 2)
    alpha_fit, _ = _ls_slope(loglogr, y_alpha)
    a_in, _ = _ls_slope(loglogr[:half], y_alpha[:half])
    a_out, _ = _ls_slope(loglogr[half:], y_alpha[half:])
    alpha_spread = abs(a_in - a_out)
    diagnostics.update(
        kappa_fit=kappa_fit,
        kappa_spread=kappa_spread,
        alpha_fit=alpha_fit,
        alpha_spread=alpha_spread,
    )
    R = float(radii.min())

    if kappa_spread <= stability_tol and kappa_fit > 2.0 + margin:
        k3 = float(np.min(neg / radii ** kappa_fit))
        reg = Ultracontractive(k3=k3, kappa=kappa_fit, radius=R)
        return RegimeClassification(reg, implied_properties(reg), diagnostics)
    if alpha_spread <= stability_tol and alpha_fit > 1.0 + margin:
        k2 = float(np.min(neg / (radii ** 2 * logr ** alpha_fit)))
        reg = Ultrabounded(k2=k2, alpha=alpha_fit, radius=R)
        return RegimeClassification(reg, implied_properties(reg), diagnostics)
    if alpha_spread <= stability_tol and alpha_fit >= 1.0 - margin:
        k1 = float(np.min(neg / (radii ** 2 * logr)))
        reg = Hyper(k1=k1, radius=R)
        return RegimeClassification(reg, implied_properties(reg), diagnostics)
    return RegimeClassification(None, (), diagnostics)


# --- sampling helpers -------------------------------------------------------------

def unit_directions(d, k, seed=0):
    """Coordinate axes plus k random unit directions."""
    rng = np.random.default_rng(seed)
    dirs = [np.eye(d)[i] for i in range(d)]
    if d > 1:
        extra = rng.standard_normal((k, d))
        extra /= np.linalg.norm(extra, axis=1, keepdims=True)
        dirs.extend(extra)
    else:
        dirs.append(np.array([-1.0]))
    return np.array(dirs)


def make_annulus_grid(d, r_min=2.0, r_max=50.0, n_radii=12, n_dirs=8, seed=0):
    """Geometric radii in [r_min, r_max] times unit directions, as an (m, d) array."""
    radii = np.geomspace(r_min, r_max, n_radii)
    dirs = unit_directions(d, n_dirs, seed=seed)
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    return pts


def dissipativity_samples(d, n_x=24, n_t=4, t_span=(0.0, 1.0), x_scale=3.0, seed=0):
    """Random (t, x, xi) triples for check_dissipativity."""
    rng = np.random.default_rng(seed)
    out = []
    times = np.linspace(*t_span, n_t)
    for t in times:
        xs = rng.standard_normal((n_x, d)) * x_scale
        xis = rng.standard_normal((n_x, d))
        out.extend((float(t), x, xi) for x, xi in zip(xs, xis))
    return out
