"""Built-in operator presets mirroring the reference drift families.

ou          b = -theta x                      no log factor: not supercontractive
loglin      b = -x (1 + log sqrt(1+|x|^2))    <b,x> <= -|x|^2 log|x|        (Hyper)
logpower    b = -x (1 + (log sqrt(1+|x|^2))^alpha)                          (Ultrabounded)
power       b = -x - x |x|^(kappa-2)          <b,x> <= -|x|^kappa           (Ultracontractive)

All presets use Q = q * I, satisfy the dissipativity bound with r0 = -theta
(resp. -1) globally, and carry their certified regime tag.
"""

import numpy as np

from .operators import Hyper, OperatorSpec, Ultrabounded, Ultracontractive


def _const_diffusion(q, d):
    Q = q * np.eye(d)
    return lambda t: Q


def ou(theta=1.0, q=1.0, d=1, time_window=(-1e6, 1e6)):
    """Ornstein-Uhlenbeck preset; the no-log-factor end of the drift ladder."""
    if theta <= 0 or q <= 0:
        raise ValueError("theta and q must be positive")

    def drift(t, x):
        return -theta * np.asarray(x, dtype=float)

    def jac(t, x):
        return -theta * np.eye(d)

    return OperatorSpec(
        dimension=d,
        diffusion=_const_diffusion(q, d),
        drift=drift,
        drift_jacobian=jac,
        eta0=q,
        Lambda=q,
        r0=-theta,
        regime=None,
        time_window=time_window,
        name=f"ou(theta={theta},q={q},d={d})",
        drift_source=f"-{theta}*x",
    )


def ou_time_dependent(theta, q=1.0, d=1, theta_min=None, time_window=(-1e6, 1e6), label="theta(t)"):
    """OU with time-dependent mean reversion theta(t) >= theta_min > 0."""
    if theta_min is None:
        raise ValueError("supply theta_min, the certified infimum of theta")

    def drift(t, x):
        return -theta(t) * np.asarray(x, dtype=float)

    def jac(t, x):
        return -theta(t) * np.eye(d)

    return OperatorSpec(
        dimension=d,
        diffusion=_const_diffusion(q, d),
        drift=drift,
        drift_jacobian=jac,
        eta0=q,
        Lambda=q,
        r0=-theta_min,
        regime=None,
        time_window=time_window,
        name=f"ou({label},q={q},d={d})",
        drift_source=f"-{label}*x",
    )


def power(kappa=4.0, q=1.0, d=1, time_window=(-1e6, 1e6)):
    """b = -x - x |x|^(kappa-2): <b,x> = -|x|^2 - |x|^kappa <= -|x|^kappa."""
    if kappa <= 2:
        raise ValueError("power preset needs kappa > 2")

    def drift(t, x):
        X = np.asarray(x, dtype=float)
        r = np.sqrt((X * X).sum(axis=-1, keepdims=True))
        return -X - X * r ** (kappa - 2.0)

    def jac(t, x):
        X = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(X))
        J = -(1.0 + r ** (kappa - 2.0)) * np.eye(d)
        if r > 0:
            J -= (kappa - 2.0) * r ** (kappa - 4.0) * np.outer(X, X)
        return J

    return OperatorSpec(
        dimension=d,
        diffusion=_const_diffusion(q, d),
        drift=drift,
        drift_jacobian=jac,
        eta0=q,
        Lambda=q,
        r0=-1.0,
        regime=Ultracontractive(k3=1.0, kappa=kappa, radius=2.0),
        time_window=time_window,
        name=f"power(kappa={kappa},q={q},d={d})",
        drift_source=f"-x1 - x1*norm(x)^{kappa - 2.0}" if d == 1 else f"-x - x|x|^{kappa - 2.0}",
    )


def _halflog1p_sq(X):
    # log sqrt(1 + |x|^2) >= log |x|, smooth at 0
    r2 = (X * X).sum(axis=-1, keepdims=True)
    return 0.5 * np.log1p(r2)


def loglin(q=1.0, d=1, time_window=(-1e6, 1e6)):
    """b = -x (1 + log sqrt(1+|x|^2)): <b,x> <= -|x|^2 log|x|, K1 = 1."""

    def drift(t, x):
        X = np.asarray(x, dtype=float)
        return -X * (1.0 + _halflog1p_sq(X))

    def jac(t, x):
        X = np.asarray(x, dtype=float)
        r2 = float((X * X).sum())
        ell = 1.0 + 0.5 * np.log1p(r2)
        return -ell * np.eye(d) - np.outer(X, X) / (1.0 + r2)

    return OperatorSpec(
        dimension=d,
        diffusion=_const_diffusion(q, d),
        drift=drift,
        drift_jacobian=jac,
        eta0=q,
        Lambda=q,
        r0=-1.0,
        regime=Hyper(k1=1.0, radius=2.0),
        time_window=time_window,
        name=f"loglin(q={q},d={d})",
        drift_source="-x1*(1 + log(sqrt(1 + norm(x)^2)))" if d == 1 else "-x(1+log sqrt(1+|x|^2))",
    )


def logpower(alpha=2.0, q=1.0, d=1, time_window=(-1e6, 1e6)):
    """b = -x (1 + (log sqrt(1+|x|^2))^alpha): ultrabounded family, K2 = 1."""
    if alpha <= 1:
        raise ValueError("logpower preset needs alpha > 1")

    def drift(t, x):
        X = np.asarray(x, dtype=float)
        return -X * (1.0 + _halflog1p_sq(X) ** alpha)

    def jac(t, x):
        X = np.asarray(x, dtype=float)
        r2 = float((X * X).sum())
        ell = 0.5 * np.log1p(r2)
        J = -(1.0 + ell ** alpha) * np.eye(d)
        if r2 > 0:
            J -= alpha * ell ** (alpha - 1.0) / (1.0 + r2) * np.outer(X, X)
        return J

    return OperatorSpec(
        dimension=d,
        diffusion=_const_diffusion(q, d),
        drift=drift,
        drift_jacobian=jac,
        eta0=q,
        Lambda=q,
        r0=-1.0,
        regime=Ultrabounded(k2=1.0, alpha=alpha, radius=2.0),
        time_window=time_window,
        name=f"logpower(alpha={alpha},q={q},d={d})",
        drift_source=f"-x1*(1 + log(sqrt(1 + norm(x)^2))^{alpha})" if d == 1 else f"-x(1+(log sqrt(1+|x|^2))^{alpha})",
    )


PRESETS = {
    "ou": ou,
    "power": power,
    "logpower": logpower,
    "loglin": loglin,
}


def catalog():
    """Name, parameters, and certified regime of every preset."""
    entries = []
    for name, builder in PRESETS.items():
        spec = builder()
        regime = type(spec.regime).__name__ if spec.regime is not None else "Unclassified"
        entries.append(
            {
                "name": name,
                "defaults": spec.name,
                "regime": regime,
                "r0": spec.r0,
                "note": "no log factor: not supercontractive" if name == "ou" else "",
            }
        )
    return entries
