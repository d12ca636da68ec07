"""Closed-form nonautonomous Ornstein-Uhlenbeck reference process.

The process dX = -theta(t) X dt + sqrt(2 q(t)) dW has generator
q(t) f'' - theta(t) x f' (diagonal in d dimensions), transition law
N(x * exp(-int theta), 2 int q(r) exp(-2 int_r^t theta) dr) per coordinate,
and (for constant coefficients) invariant law N(0, q/theta).  Everything here
is exact up to quadrature tolerance and anchors the Monte Carlo engine.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import NotConstantCoefficient, QuadratureFailure, UnsupportedFunction

# --- adaptive Simpson quadrature ------------------------------------------------

def adaptive_simpson(f, a, b, tol=1e-10, max_depth=48):
    """Integrate f over [a, b] by adaptive Simpson to absolute tolerance tol."""
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    if a == b:
        return 0.0

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        fl = f(lmid)
        fr = f(rmid)
        left = simpson(lo, mid, flo, fl, fmid)
        right = simpson(mid, hi, fmid, fr, fhi)
        if depth >= max_depth:
            raise QuadratureFailure(
                f"adaptive Simpson exceeded depth {max_depth} on [{lo}, {hi}]"
            )
        if abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(lo, mid, flo, fl, fmid, left, eps / 2.0, depth + 1) + recurse(
            mid, hi, fmid, fr, fhi, right, eps / 2.0, depth + 1
        )

    mid = 0.5 * (a + b)
    fa, fm, fb = f(a), f(mid), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


# --- closed-form test functions --------------------------------------------------

def _gaussian_poly_moments(mean, var, degree):
    """Raw moments E[Y^k], k=0..degree, for Y ~ N(mean, var)."""
    m = [1.0, mean]
    for k in range(2, degree + 1):
        m.append(mean * m[k - 1] + (k - 1) * var * m[k - 2])
    return m[: degree + 1]


@dataclass(frozen=True)
class Poly:
    """Polynomial sum_k coeffs[k] * y^k."""

    coeffs: tuple

    def __call__(self, y):
        return np.polynomial.polynomial.polyval(np.asarray(y, dtype=float), self.coeffs)

    def derivative(self):
        c = tuple((k + 1) * v for k, v in enumerate(self.coeffs[1:]))
        return Poly(c or (0.0,))

    def ou_expect(self, mean, var):
        moments = _gaussian_poly_moments(mean, var, len(self.coeffs) - 1)
        return float(sum(c * m for c, m in zip(self.coeffs, moments)))


@dataclass(frozen=True)
class PolyGauss:
    """P(y) * exp(-a (y - z)^2), closed under differentiation."""

    coeffs: tuple
    a: float
    z: float

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        p = np.polynomial.polynomial.polyval(y, self.coeffs)
        return p * np.exp(-self.a * (y - self.z) ** 2)

    def derivative(self):
        # (P' - 2a (y - z) P) e^{-a(y-z)^2}
        c = list(self.coeffs)
        dp = [(k + 1) * v for k, v in enumerate(c[1:])] or [0.0]
        shifted = [0.0] + c  # y * P
        lowered = [v - self.z * w for v, w in zip(shifted, c + [0.0])]
        # lowered = (y - z) P as coefficient list of length len(c)+1
        out = [0.0] * (len(c) + 1)
        for k, v in enumerate(dp):
            out[k] += v
        for k, v in enumerate(lowered):
            out[k] -= 2.0 * self.a * v
        return PolyGauss(tuple(out), self.a, self.z)

    def ou_expect(self, mean, var):
        denom = 1.0 + 2.0 * self.a * var
        pref = denom ** -0.5 * math.exp(-self.a * (mean - self.z) ** 2 / denom)
        m_t = (mean + 2.0 * self.a * var * self.z) / denom
        v_t = var / denom
        moments = _gaussian_poly_moments(m_t, v_t, len(self.coeffs) - 1)
        return float(pref * sum(c * m for c, m in zip(self.coeffs, moments)))


def GaussBump(a, z):
    """exp(-a (y - z)^2)."""
    return PolyGauss((1.0,), a, z)


@dataclass(frozen=True)
class Sinusoid:
    """amplitude * cos(omega y + phase)."""

    omega: float
    phase: float = 0.0
    amplitude: float = 1.0

    def __call__(self, y):
        return self.amplitude * np.cos(self.omega * np.asarray(y, dtype=float) + self.phase)

    def derivative(self):
        return Sinusoid(self.omega, self.phase + 0.5 * math.pi, self.amplitude * self.omega)

    def ou_expect(self, mean, var):
        return float(
            self.amplitude
            * math.exp(-0.5 * self.omega ** 2 * var)
            * math.cos(self.omega * mean + self.phase)
        )


# --- the reference process --------------------------------------------------------

@dataclass(frozen=True)
class OUSpec:
    """Diagonal OU reference: theta, q positive scalars or scalar functions of t."""

    theta: object = 1.0
    q: object = 1.0
    dimension: int = 1

    def __post_init__(self):
        for name in ("theta", "q"):
            v = getattr(self, name)
            if not callable(v) and v <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def constant(self):
        return not callable(self.theta) and not callable(self.q)

    def theta_at(self, t):
        return self.theta(t) if callable(self.theta) else self.theta

    def q_at(self, t):
        return self.q(t) if callable(self.q) else self.q


def ou_mean_var(ou, s, t, x, tol=1e-10):
    """Exact transition mean vector and per-coordinate variance of G(t, s) at x.

    mean = x * exp(-int_s^t theta);  var = 2 int_s^t q(r) exp(-2 int_r^t theta) dr.
    Constant coefficients use closed forms; otherwise adaptive Simpson at `tol`.
    """
    if t < s:
        raise ValueError("requires t >= s")
    x = np.asarray(x, dtype=float)
    if t == s:
        return x.copy(), 0.0
    if ou.constant:
        th, qv = ou.theta, ou.q
        decay = math.exp(-th * (t - s))
        var = qv / th * (1.0 - math.exp(-2.0 * th * (t - s)))
        return x * decay, var
    for u in np.linspace(s, t, 33):
        if ou.theta_at(u) <= 0 or ou.q_at(u) <= 0:
            raise ValueError("theta and q must stay positive on [s, t]")
    total = adaptive_simpson(ou.theta_at, s, t, tol)

    def tail(r):
        return adaptive_simpson(ou.theta_at, r, t, tol * 0.1)

    var = adaptive_simpson(lambda r: 2.0 * ou.q_at(r) * math.exp(-2.0 * tail(r)), s, t, tol)
    return x * math.exp(-total), var


def ou_decay_factor(ou, s, t, tol=1e-10):
    """exp(-int_s^t theta): the exact spatial-derivative factor of G(t, s)."""
    if ou.constant:
        return math.exp(-ou.theta * (t - s))
    return math.exp(-adaptive_simpson(ou.theta_at, s, t, tol))


def ou_apply(ou, f, s, t, x, tol=1e-10):
    """Exact (G(t, s) f)(x) for f in the closed-form class (dimension 1).

    Supported f: Poly, PolyGauss/GaussBump, Sinusoid, or any object exposing
    ou_expect(mean, var).
    """
    if ou.dimension != 1:
        raise UnsupportedFunction("closed-form application is one-dimensional")
    mean, var = ou_mean_var(ou, s, t, np.atleast_1d(x), tol)
    m = float(mean[0])
    if var == 0.0:
        return float(f(m))
    if not hasattr(f, "ou_expect"):
        raise UnsupportedFunction(f"{type(f).__name__} has no closed form")
    return f.ou_expect(m, var)


def ou_invariant(ou):
    """Per-coordinate variance q/theta of the invariant Gaussian N(0, q/theta)."""
    if not ou.constant:
        raise NotConstantCoefficient("invariant law needs constant coefficients")
    return ou.q / ou.theta


def ou_gauss_exp_moment(sigma2, lam, power, d=1):
    """E exp(lam |X|^power) for X ~ N(0, sigma2 I_d); inf when divergent.

    power=2: (1 - 2 lam sigma2)^(-d/2) below the threshold lam < 1/(2 sigma2).
    power=1 (d=1): 2 exp(lam^2 sigma2 / 2) Phi(lam sqrt(sigma2)).
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if lam == 0.0:
        return 1.0
    if power == 2:
        if lam >= 1.0 / (2.0 * sigma2):
            return math.inf
        return (1.0 - 2.0 * lam * sigma2) ** (-0.5 * d)
    if power == 1:
        if d != 1:
            raise UnsupportedFunction("power=1 exponential moment implemented for d=1")
        s = math.sqrt(sigma2)
        return 2.0 * math.exp(0.5 * lam * lam * sigma2) * float(ndtr(lam * s))
    raise ValueError("power must be 1 or 2")
