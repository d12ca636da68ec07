"""Closed-form constants of the quantitative estimates, as pure calculators.

Everything here is deterministic arithmetic on the structural constants
(eta0, Lambda, r0, K3, kappa, ...); the Monte Carlo harness consumes these
values as right-hand sides.  Each formula has an independent one-variable
calculus oracle in the test suite.
"""

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DegenerateExponents


def super_lsi_constants(p, q, t, s, c_tilde, Lambda, r0):
    """(M1, M2) of the measure log-Sobolev bound implied by a finite p->q norm.

    M1 = 2 Lambda p (q-1) / (|r0| (q-p)) * (1 - e^{2 r0 (t-s)})
    M2 = p q / (2 (q-p)) * log(c_tilde)
    """
    if not 1.0 < p < q:
        raise DegenerateExponents("need 1 < p < q")
    if t <= s:
        raise ValueError("need t > s")
    if c_tilde < 1.0:
        raise ValueError("operator-norm estimate c_tilde must be >= 1")
    if r0 >= 0:
        raise ValueError("r0 must be negative")
    m1 = 2.0 * Lambda * p * (q - 1.0) / (abs(r0) * (q - p)) * (1.0 - math.exp(2.0 * r0 * (t - s)))
    m2 = p * q / (2.0 * (q - p)) * math.log(c_tilde)
    return m1, m2


def hyper_exponent(p, eta0, epsilon, span):
    """q(t) = e^{2 eta0 (t-s)/epsilon} (p - 1) + 1 from the recursion clock."""
    if p <= 1 or epsilon <= 0 or span < 0:
        raise ValueError("need p > 1, epsilon > 0, span >= 0")
    return math.exp(2.0 * eta0 * span / epsilon) * (p - 1.0) + 1.0


def hyper_defect(p, q_t, beta_value):
    """m(t) = 2 beta (1/p - 1/q(t)): log of the norm growth allowed by the recursion."""
    return 2.0 * beta_value * (1.0 / p - 1.0 / q_t)


def harnack_factor(p, eta0, span, dist2):
    """exp(p |x-y|^2 / (4 (p-1) eta0 (t-s)))."""
    if p <= 1 or span <= 0:
        raise ValueError("need p > 1 and t > s")
    return math.exp(p * dist2 / (4.0 * (p - 1.0) * eta0 * span))


def supercontractive_lambda0(p, q, eta0, span):
    """lambda0 = q / (2 eta0 (p-1) (t-s)): the Gaussian-moment order in C_{p,q}."""
    if p <= 1 or span <= 0:
        raise ValueError("need p > 1 and t > s")
    return q / (2.0 * eta0 * (p - 1.0) * span)


def cpq_constant(p, q, span, eta0, radius, phi_norm):
    """C_{p,q}(t-s) = 2^q exp(R^2 / (2 eta0 (p-1) (t-s))) * ||phi_{lambda0}||_1.

    radius is any R with mu_t(B(0,R)) > 2^{-p}.
    """
    return 2.0 ** q * math.exp(radius ** 2 / (2.0 * eta0 * (p - 1.0) * span)) * phi_norm


def c2inf_constant(span, eta0, radius, m_value):
    """C_{2,inf}(t-s) = 2 e^{R/(2 eta0 (t-s))} M_{(t-s)/2, 1/(2 eta0 (t-s))}.

    radius is any R with mu_t(B(0,R)) > 1/4; m_value bounds the sup of
    G applied to the Gaussian function of order 1/(2 eta0 (t-s)) over windows
    of length >= (t-s)/2.
    """
    return 2.0 * math.exp(radius / (2.0 * eta0 * span)) * m_value


def analytic_c1(kappa, delta):
    """c1 = (2/(kappa delta))^{2/(kappa-2)} (kappa-2)/kappa:
    delta t^kappa - lam t^2 >= -c1 lam^{kappa/(kappa-2)} for all t >= 0."""
    if kappa <= 2 or delta <= 0:
        raise ValueError("need kappa > 2 and delta > 0")
    return (2.0 / (kappa * delta)) ** (2.0 / (kappa - 2.0)) * (kappa - 2.0) / kappa


def c_kappa(kappa, Lambda, k3):
    """Smallest C with 2 lam Lambda y^2 <= (K3/2) y^kappa + C lam^{kappa/(kappa-2)}.

    Closed form by one-variable maximization: C = 2 Lambda (kappa-2)/kappa *
    (8 Lambda / (K3 kappa))^{2/(kappa-2)}.
    """
    if kappa <= 2:
        raise ValueError("need kappa > 2")
    return 2.0 * Lambda * (kappa - 2.0) / kappa * (8.0 * Lambda / (k3 * kappa)) ** (2.0 / (kappa - 2.0))


@dataclass(frozen=True)
class MTildeBound:
    """Analytic sup bound for G applied to exp(lam |x|^2) under the kappa-drift."""

    kappa: float
    k3: float
    Lambda: float
    d: int
    delta: float
    lam: float
    k0: float
    c1: float  # 4 C_kappa / K3
    c2: float  # 4 Lambda d / K3
    c_kappa: float
    branch_fast: float  # K0 delta^{2/(2-kappa)} lam
    branch_moment: float  # (C1 lam^{kappa^2/(2(kappa-2))} + C2 lam^{kappa/2})^{2/kappa}
    log_bound: float

    @property
    def bound(self):
        return math.exp(self.log_bound) if self.log_bound < 700 else math.inf


def mtilde_bound(kappa, k3, Lambda, d, delta, lam):
    """exp(max{K0 delta^{2/(2-kappa)} lam, (C1 lam^{kappa^2/(2(kappa-2))} + C2 lam^{kappa/2})^{2/kappa}})
    with K0 = [(kappa-2) K3 / 4]^{2/(2-kappa)}, C1 = 4 C_kappa / K3, C2 = 4 Lambda d / K3."""
    if kappa <= 2 or min(k3, Lambda, delta, lam) <= 0 or d < 1:
        raise ValueError("need kappa > 2 and positive constants")
    ck = c_kappa(kappa, Lambda, k3)
    k0 = ((kappa - 2.0) * k3 / 4.0) ** (2.0 / (2.0 - kappa))
    c1 = 4.0 * ck / k3
    c2 = 4.0 * Lambda * d / k3
    fast = k0 * delta ** (2.0 / (2.0 - kappa)) * lam
    moment = (c1 * lam ** (kappa ** 2 / (2.0 * (kappa - 2.0))) + c2 * lam ** (kappa / 2.0)) ** (2.0 / kappa)
    return MTildeBound(
        kappa=kappa,
        k3=k3,
        Lambda=Lambda,
        d=d,
        delta=delta,
        lam=lam,
        k0=k0,
        c1=c1,
        c2=c2,
        c_kappa=ck,
        branch_fast=fast,
        branch_moment=moment,
        log_bound=max(fast, moment),
    )


@dataclass(frozen=True)
class PowerDriftEnvelope:
    """Convex increasing h_lam with A(t) phi_lam <= -h_lam(phi_lam) outside B(0,R)
    for the kappa-drift: the raw profile g_lam clipped flat at its minimizer."""

    kappa: float
    k3: float
    Lambda: float
    d: int
    lam: float
    y0: float  # minimizer of g_lam on [1, inf)
    floor: float  # g_lam(y0)

    def g(self, y):
        ka, lam = self.kappa, self.lam
        ck = c_kappa(ka, self.Lambda, self.k3)
        coef = self.k3 * math.log(y) ** (ka / 2.0) if y >= 1.0 else 0.0
        penalty = 2.0 * lam ** (ka ** 2 / (2.0 * (ka - 2.0))) * ck + 2.0 * lam ** (ka / 2.0) * self.Lambda * self.d
        return lam ** (1.0 - ka / 2.0) * y * (coef - penalty)

    def __call__(self, y):
        if y <= self.y0:
            return self.floor
        return self.g(y)


def power_drift_envelope(kappa, k3, Lambda, d, lam):
    """Construct h_lam for the kappa-drift by minimizing the raw profile g_lam."""
    if kappa <= 2 or min(k3, Lambda, lam) <= 0:
        raise ValueError("need kappa > 2 and positive constants")
    env = PowerDriftEnvelope(kappa=kappa, k3=k3, Lambda=Lambda, d=d, lam=lam, y0=1.0, floor=0.0)
    ck = c_kappa(kappa, Lambda, k3)
    penalty = 2.0 * lam ** (kappa ** 2 / (2.0 * (kappa - 2.0))) * ck + 2.0 * lam ** (kappa / 2.0) * Lambda * d
    ka = kappa

    def gprime(u):  # d/dy [y (K3 (log y)^{ka/2} - penalty)] at y = e^u
        return k3 * u ** (ka / 2.0) + k3 * (ka / 2.0) * u ** (ka / 2.0 - 1.0) - penalty

    # gprime is increasing in u, negative at u ~ 0+, positive for large u
    lo, hi = 1e-12, 1.0
    while gprime(hi) <= 0:
        hi *= 2.0
        if hi > 1e9:
            raise ValueError("could not bracket the envelope minimizer")
    u0 = brentq(gprime, lo, hi, xtol=1e-14, rtol=1e-13)
    y0 = math.exp(u0)
    env = PowerDriftEnvelope(kappa=kappa, k3=k3, Lambda=Lambda, d=d, lam=lam, y0=y0, floor=0.0)
    return PowerDriftEnvelope(
        kappa=kappa, k3=k3, Lambda=Lambda, d=d, lam=lam, y0=y0, floor=env.g(y0)
    )
