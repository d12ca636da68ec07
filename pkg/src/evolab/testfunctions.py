"""Test-function families standing in for "every f in C^1_b".

Each member is C^1 and bounded, knows its gradient (and hessian where needed),
and, when it is a 1-d member of the reference process's closed-form class,
carries the matching oracle descriptor so checks can be cross-validated exactly.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import oracle


@dataclass(frozen=True)
class TestFunction:
    """Scalar field on R^d with derivative callables, vectorized over (n, d)."""

    name: str
    value: Callable                 # (n, d) -> (n,)
    gradient: Callable              # (n, d) -> (n, d)
    hessian: Optional[Callable] = None  # (n, d) -> (n, d, d)
    sup_norm: Optional[float] = None
    ou_form: object = None          # oracle descriptor when d == 1 and closed-form

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def grad_norm(self):
        """|grad f| as a plain scalar field."""
        g = self.gradient

        def val(x):
            G = g(np.asarray(x, dtype=float))
            return np.sqrt((G * G).sum(axis=-1))

        return val


def gaussian_bump(a, z, d=1, scale=1.0, shift=0.0):
    """scale * exp(-a |x - z|^2) + shift."""
    z = np.broadcast_to(np.asarray(z, dtype=float), (d,))

    def value(x):
        diff = x - z
        return scale * np.exp(-a * (diff * diff).sum(axis=-1)) + shift

    def gradient(x):
        diff = x - z
        core = scale * np.exp(-a * (diff * diff).sum(axis=-1))
        return -2.0 * a * diff * core[..., None]

    def hessian(x):
        x = np.atleast_2d(x)
        diff = x - z
        core = scale * np.exp(-a * (diff * diff).sum(axis=-1))
        eye = np.eye(d)
        outer = diff[:, :, None] * diff[:, None, :]
        return core[:, None, None] * (4.0 * a * a * outer - 2.0 * a * eye)

    ou_form = None
    if d == 1:
        base = oracle.PolyGauss((scale,), a, float(z[0]))
        if shift == 0.0:
            ou_form = base
        else:
            ou_form = _ShiftedForm(base, shift)
    return TestFunction(
        name=f"gauss(a={a},z={np.round(z, 3).tolist()},scale={scale},shift={shift})",
        value=value,
        gradient=gradient,
        hessian=hessian,
        sup_norm=abs(scale) + abs(shift),
        ou_form=ou_form,
    )


@dataclass(frozen=True)
class _ShiftedForm:
    base: object
    shift: float

    def __call__(self, y):
        return self.base(y) + self.shift

    def ou_expect(self, mean, var):
        return self.base.ou_expect(mean, var) + self.shift


def constant(c, d=1):
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], float(c))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape)

    def hessian(x):
        x = np.atleast_2d(x)
        return np.zeros((x.shape[0], d, d))

    return TestFunction(
        name=f"const({c})",
        value=value,
        gradient=gradient,
        hessian=hessian,
        sup_norm=abs(c),
        ou_form=oracle.Poly((float(c),)) if d == 1 else None,
    )


def linear(slope=1.0, d=1, axis=0):
    """slope * x_axis (unbounded; used only where the check tolerates it)."""

    def value(x):
        return slope * np.asarray(x, dtype=float)[..., axis]

    def gradient(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape)
        g[..., axis] = slope
        return g

    def hessian(x):
        x = np.atleast_2d(x)
        return np.zeros((x.shape[0], d, d))

    return TestFunction(
        name=f"linear({slope},axis={axis})",
        value=value,
        gradient=gradient,
        hessian=hessian,
        sup_norm=None,
        ou_form=oracle.Poly((0.0, slope)) if d == 1 else None,
    )


def polynomial(coeffs, d=1):
    """1-d polynomial in x_1 (for oracle cross-checks)."""
    if d != 1:
        raise ValueError("polynomial test functions are one-dimensional")
    form = oracle.Poly(tuple(float(c) for c in coeffs))
    dform = form.derivative()
    ddform = dform.derivative()

    def value(x):
        return form(np.asarray(x, dtype=float)[..., 0])

    def gradient(x):
        return dform(np.asarray(x, dtype=float)[..., 0])[..., None]

    def hessian(x):
        x = np.atleast_2d(x)
        return ddform(x[..., 0])[:, None, None]

    return TestFunction(
        name=f"poly({list(coeffs)})",
        value=value,
        gradient=gradient,
        hessian=hessian,
        sup_norm=None,
        ou_form=form,
    )


def trig(omega, d=1, phase=0.0, amplitude=1.0):
    """amplitude * cos(omega . x + phase); product form in d > 1 uses axis 0 only."""
    omega_vec = np.broadcast_to(np.asarray(omega, dtype=float), (d,))

    def value(x):
        return amplitude * np.cos((np.asarray(x, dtype=float) * omega_vec).sum(axis=-1) + phase)

    def gradient(x):
        phase_val = (np.asarray(x, dtype=float) * omega_vec).sum(axis=-1) + phase
        return -amplitude * np.sin(phase_val)[..., None] * omega_vec

    def hessian(x):
        x = np.atleast_2d(x)
        phase_val = (x * omega_vec).sum(axis=-1) + phase
        return -amplitude * np.cos(phase_val)[:, None, None] * np.outer(omega_vec, omega_vec)

    ou_form = None
    if d == 1:
        ou_form = oracle.Sinusoid(float(omega_vec[0]), phase, amplitude)
    return TestFunction(
        name=f"trig(omega={np.round(omega_vec, 3).tolist()},phase={phase})",
        value=value,
        gradient=gradient,
        hessian=hessian,
        sup_norm=abs(amplitude),
        ou_form=ou_form,
    )


def poly_cutoff(coeffs, a=0.25, d=1):
    """P(x_1) * exp(-a |x|^2): polynomial content, bounded by the cutoff."""
    if d != 1:
        raise ValueError("poly_cutoff test functions are one-dimensional")
    form = oracle.PolyGauss(tuple(float(c) for c in coeffs), a, 0.0)
    dform = form.derivative()
    ddform = dform.derivative()

    def value(x):
        return form(np.asarray(x, dtype=float)[..., 0])

    def gradient(x):
        return dform(np.asarray(x, dtype=float)[..., 0])[..., None]

    def hessian(x):
        x = np.atleast_2d(x)
        return ddform(x[..., 0])[:, None, None]

    return TestFunction(
        name=f"polycut({list(coeffs)},a={a})",
        value=value,
        gradient=gradient,
        hessian=hessian,
        sup_norm=None,
        ou_form=form,
    )


def smooth_indicator(center, width, sharpness=6.0, d=1):
    """Sigmoid-smoothed indicator of the ball |x - center| <= width."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (d,))

    def _s(u):
        return 1.0 / (1.0 + np.exp(np.clip(u, -60.0, 60.0)))

    def value(x):
        r = np.sqrt(((np.asarray(x, dtype=float) - center) ** 2).sum(axis=-1))
        return _s(sharpness * (r - width))

    def gradient(x):
        X = np.asarray(x, dtype=float)
        diff = X - center
        r = np.sqrt((diff * diff).sum(axis=-1))
        r_safe = np.maximum(r, 1e-12)
        u = sharpness * (r - width)
        sig = _s(u)
        dsig = -sharpness * sig * (1.0 - sig)
        return dsig[..., None] * diff / r_safe[..., None]

    return TestFunction(
        name=f"smoothind(c={np.round(center, 3).tolist()},w={width})",
        value=value,
        gradient=gradient,
        hessian=None,
        sup_norm=1.0,
        ou_form=None,
    )


# --- families -------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunctionFamily:
    """Named finite family standing in for a universal quantifier over C^1_b."""

    name: str
    members: tuple

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def standard_family(d=1, centers=(-1.0, 0.0, 1.0), widths=(0.35, 0.8), rng=None, extra_random=0):
    """Bounded C^1 battery: Gaussian bumps, trig, cutoff polynomials, smooth indicators."""
    members = []
    for z in centers:
        for w in widths:
            members.append(gaussian_bump(1.0 / (2.0 * w * w), z, d=d))
    members.append(trig(1.0, d=d))
    members.append(trig(2.0, d=d, phase=0.7))
    if d == 1:
        members.append(poly_cutoff((0.2, 0.0, 1.0), a=0.25))
        members.append(poly_cutoff((0.0, 1.0), a=0.5))
    members.append(smooth_indicator(0.0, 1.0, d=d))
    if extra_random and rng is not None:
        for _ in range(extra_random):
            z = rng.uniform(-1.5, 1.5, size=d) if d > 1 else float(rng.uniform(-1.5, 1.5))
            w = float(rng.uniform(0.2, 1.0))
            members.append(gaussian_bump(1.0 / (2.0 * w * w), z, d=d))
    return TestFunctionFamily(name=f"standard(d={d})", members=tuple(members))


def bump_family(d=1, centers=np.linspace(0.0, 2.6, 14), widths=(0.15, 0.25, 0.4, 0.7, 1.2)):
    """Concentration battery for log-Sobolev defect profiling."""
    members = []
    for z in centers:
        for w in widths:
            members.append(gaussian_bump(1.0 / (2.0 * w * w), float(z), d=d))
    return TestFunctionFamily(name=f"bumps(d={d})", members=tuple(members))
