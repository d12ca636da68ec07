"""Batch entry point: load an operator config, run selected checks, write artifacts.

Exit codes: 0 all pass, 2 at least one fail verdict, 3 inconclusive verdicts
only, 64 configuration errors (bad config, unknown check, regime mismatch),
70 runtime estimator errors (blow-up, diverged moments, ill-conditioned fits).

The output directory is content-addressed by the manifest hash (spec content
hash + checks + budgets + seed); an existing directory is never overwritten.
Reruns of the same manifest reproduce every artifact byte-for-byte (the
timestamp lives only in manifest.json and never enters the hash or reports).
"""

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import inequalities as ineq
from . import presets, reporting, storage
from .config import load_config
from .engine import (
    McEstimate,
    PathConfig,
    SeedLineage,
    backward_derivative_check,
    chapman_kolmogorov_check,
)
from .errors import (
    BlowupError,
    ConfigError,
    EvolabError,
    ExpMomentDiverged,
    FitIllConditioned,
    QuadratureFailure,
    RegimeMismatch,
)
from .measures import estimate_measure, exp_moment, invariance_residual
from .operators import Ultracontractive, implied_properties
from .testfunctions import bump_family, gaussian_bump, standard_family, trig

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_CONFIG = 64
EXIT_RUNTIME = 70


@dataclass(frozen=True)
class RunManifest:
    spec_path: str
    spec_hash: str
    checks: tuple
    samples: int
    seed: int
    step: float
    burn_in: float  # 0 means the spec default 10/|r0|
    family_size: int
    delta_grid: tuple
    out_dir: str
    timestamp: str

    def content_hash(self):
        """Hash of everything that determines the numbers (timestamp excluded)."""
        payload = json.dumps(
            {
                "spec_hash": self.spec_hash,
                "checks": list(self.checks),
                "samples": self.samples,
                "seed": self.seed,
                "step": self.step,
                "burn_in": self.burn_in,
                "family_size": self.family_size,
                "delta_grid": list(self.delta_grid),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


class _RunContext:
    """Lazy shared state: measures, the blow-up fit, the test family."""

    def __init__(self, loaded, manifest):
        self.loaded = loaded
        self.spec = loaded.spec
        self.manifest = manifest
        self.config = PathConfig(step_size=manifest.step)
        self.lineage = SeedLineage(manifest.seed)
        self.family = standard_family(d=self.spec.dimension)
        self._measures = {}
        self._blowup = None
        self.s0 = 0.0

    def burn_in(self):
        return self.manifest.burn_in if self.manifest.burn_in > 0 else None

    def measure(self, t):
        key = round(float(t), 12)
        if key not in self._measures:
            self._measures[key] = estimate_measure(
                self.spec,
                t,
                burn_in=self.burn_in(),
                n=max(self.manifest.samples // 2, 1000),
                config=self.config,
                lineage=self.lineage.child(900_000 + len(self._measures)),
            )
        return self._measures[key]

    def blowup_fit(self):
        if self._blowup is None:
            self._blowup = ineq.blowup_exponent_fit(
                self.spec,
                self.manifest.delta_grid,
                self.s0,
                self.measure(self.s0),
                n=min(self.manifest.samples, 60_000),
                config=self.config,
                lineage=self.lineage.child(800_000),
            )
        return self._blowup


def _residual_report(name, params, residual):
    """Wrap a residual McEstimate as a report passing iff residual < 3 stderr."""
    bound = 3.0 * residual.stderr
    margin = bound - residual.value
    verdict = "pass" if margin >= 0.0 else "fail"
    return ineq.InequalityReport(
        name=name,
        parameters=params,
        lhs=McEstimate(residual.value, residual.stderr, residual.n),
        rhs=McEstimate(bound, 0.0, residual.n),
        margin=margin,
        margin_stderr=residual.stderr,
        verdict=verdict,
        notes="residual against 3x its combined standard error",
    )


def _run_gradient(ctx):
    out = []
    x = np.zeros(ctx.spec.dimension)
    x[0] = 0.6  # off-center so the gradient does not vanish by symmetry
    for f in (gaussian_bump(1.0, 0.0, d=ctx.spec.dimension), trig(1.0, d=ctx.spec.dimension, phase=0.4)):
        for dt in (0.25, 1.0):
            out.append(
                ineq.gradient_estimate_check(
                    ctx.spec, f, 2.0, ctx.s0, ctx.s0 + dt, x,
                    n=ctx.manifest.samples, config=ctx.config, lineage=ctx.lineage,
                )
            )
    return out


def _run_harnack(ctx):
    out = []
    d = ctx.spec.dimension
    f = gaussian_bump(1.0, 0.5, d=d)
    xs = [-1.0, 0.0, 1.0]
    for dt in (0.25, 1.0):
        for xv in xs:
            for yv in xs:
                x = np.zeros(d); x[0] = xv
                y = np.zeros(d); y[0] = yv
                out.append(
                    ineq.harnack_check(
                        ctx.spec, f, 2.0, ctx.s0, ctx.s0 + dt, x, y,
                        n=ctx.manifest.samples, config=ctx.config, lineage=ctx.lineage,
                    )
                )
    return out


def _run_kernel_lsi(ctx):
    out = []
    f = gaussian_bump(1.0, 0.0, d=ctx.spec.dimension, shift=0.1)
    for dt in (0.25, 1.0):
        out.append(
            ineq.kernel_lsi_check(
                ctx.spec, f, 2.0, ctx.s0, ctx.s0 + dt, np.zeros(ctx.spec.dimension),
                n=ctx.manifest.samples, config=ctx.config, lineage=ctx.lineage,
            )
        )
    return out


def _run_measure_lsi(ctx):
    mu = ctx.measure(ctx.s0)
    if isinstance(ctx.spec.regime, Ultracontractive):
        profile = ineq.beta_profile(ctx.spec, np.geomspace(0.05, 0.5, 6), bump_family(d=1), ctx.s0, mu)
        beta_fn = profile.beta_fn()
    else:
        beta_fn = lambda e: 2.0 / e  # generic decreasing profile for smoke checks
    out = []
    for f in ctx.family:
        out.append(ineq.measure_lsi_check(ctx.spec, mu, f, 0.25, beta_fn))
    return out


def _run_invariance(ctx):
    out = []
    for f in (trig(1.0, d=ctx.spec.dimension), gaussian_bump(1.0, 0.0, d=ctx.spec.dimension)):
        res = invariance_residual(
            ctx.spec, f, ctx.s0, ctx.s0 + 1.0,
            n=max(ctx.manifest.samples // 10, 1000),
            config=ctx.config, lineage=ctx.lineage.child(7),
            burn_in=ctx.burn_in(),
        )
        out.append(_residual_report("invariance", {"f": f.name, "s": ctx.s0, "t": ctx.s0 + 1.0}, res))
    return out


def _run_supercontractivity(ctx):
    mu_s = ctx.measure(ctx.s0)
    mu_t = ctx.measure(ctx.s0 + 1.0)
    return [
        ineq.supercontractivity_norm_bound(
            ctx.spec, ctx.family, 2.0, 3.0, ctx.s0, ctx.s0 + 1.0, mu_s, mu_t,
            config=ctx.config, lineage=ctx.lineage.child(8),
        )
    ]


def _run_ultrabounded(ctx):
    mu_s = ctx.measure(ctx.s0)
    mu_t = ctx.measure(ctx.s0 + 1.0)
    supplier = "analytic" if isinstance(ctx.spec.regime, Ultracontractive) else "empirical"
    return [
        ineq.ultrabounded_bound_check(
            ctx.spec, ctx.family, ctx.s0, ctx.s0 + 1.0, mu_s, mu_t,
            m_supplier=supplier, config=ctx.config, lineage=ctx.lineage.child(9),
        )
    ]


def _run_l1_l2(ctx):
    fit = ctx.blowup_fit()
    mu_s = ctx.measure(ctx.s0)
    out = []
    for dt in (0.5, 1.0):
        mu_t = ctx.measure(ctx.s0 + dt)
        out.append(
            ineq.l1_l2_check(
                ctx.spec, ctx.family, ctx.s0, ctx.s0 + dt, fit.envelope_c, mu_s, mu_t,
                config=ctx.config, lineage=ctx.lineage.child(10),
            )
        )
    return out


def _run_heat_kernel(ctx):
    fit = ctx.blowup_fit()
    mu_s = ctx.measure(ctx.s0)
    out = []
    for dt in (0.4, 0.65):  # windows disjoint from the fit grid
        out.append(
            ineq.heat_kernel_sup_check(
                ctx.spec, ctx.s0, ctx.s0 + dt, fit.envelope_c, mu_s,
                n=min(ctx.manifest.samples, 60_000), config=ctx.config,
                lineage=ctx.lineage.child(11),
            )
        )
    return out


def _run_beta_profile(ctx):
    mu = ctx.measure(ctx.s0)
    profile = ineq.beta_profile(ctx.spec, np.geomspace(0.04, 0.5, 8), bump_family(d=1), ctx.s0, mu)
    monotone = all(b1 >= b2 - 1e-12 for b1, b2 in zip(profile.beta_hats, profile.beta_hats[1:]))
    report = ineq.InequalityReport(
        name="beta_profile",
        parameters={"s": ctx.s0, "eps_min": profile.epsilons[0], "eps_max": profile.epsilons[-1]},
        lhs=McEstimate(profile.tail_exponent, 0.0, len(profile.epsilons)),
        rhs=McEstimate(profile.target_exponent, 0.0, 2),
        margin=profile.target_exponent - profile.tail_exponent,
        margin_stderr=0.0,
        verdict="pass" if monotone and not np.isnan(profile.tail_exponent) else "fail",
        notes="lhs = fitted tail exponent of the defect profile; verdict = monotone + fit defined",
        details={"beta_hats": list(profile.beta_hats), "c1_analytic": profile.c1_analytic},
    )
    return [report], profile


def _run_uniform_integrability(ctx):
    mu_s = ctx.measure(ctx.s0)
    mu_t = ctx.measure(ctx.s0 + 1.0)
    return [
        ineq.uniform_integrability_check(
            ctx.spec, ctx.family, ctx.s0, ctx.s0 + 1.0, (0.5, 1.0, 2.0, 4.0), mu_s, mu_t,
            config=ctx.config, lineage=ctx.lineage.child(12),
        )
    ]


def _run_potential(ctx):
    if ctx.loaded.potential is None:
        raise ConfigError("--checks potential needs a [potential] section in the config")
    f = gaussian_bump(1.0, 0.0, d=ctx.spec.dimension, shift=0.05)
    return [
        ineq.potential_contraction_check(
            ctx.spec, ctx.loaded.potential, f, ctx.s0, ctx.s0 + 1.0,
            np.zeros(ctx.spec.dimension), n=ctx.manifest.samples,
            config=ctx.config, lineage=ctx.lineage.child(13),
            measure_s=ctx.measure(ctx.s0),
        )
    ]


def _run_chapman(ctx):
    f = trig(1.0, d=ctx.spec.dimension)
    res = chapman_kolmogorov_check(
        ctx.spec, f, ctx.s0, ctx.s0 + 0.5, ctx.s0 + 1.0, np.zeros(ctx.spec.dimension),
        n=ctx.manifest.samples, config=ctx.config, lineage=ctx.lineage.child(14),
    )
    return [_residual_report("chapman_kolmogorov", {"f": f.name}, res)]


def _run_backward(ctx):
    f = gaussian_bump(1.0, 0.0, d=ctx.spec.dimension)
    res = backward_derivative_check(
        ctx.spec, f, ctx.s0 + 0.5, ctx.s0 + 1.5, np.zeros(ctx.spec.dimension),
        n=ctx.manifest.samples, config=ctx.config, lineage=ctx.lineage.child(15),
    )
    return [_residual_report("backward_derivative", {"f": f.name}, res)]


CHECKS = {
    "gradient": _run_gradient,
    "harnack": _run_harnack,
    "kernel_lsi": _run_kernel_lsi,
    "measure_lsi": _run_measure_lsi,
    "invariance": _run_invariance,
    "supercontractivity": _run_supercontractivity,
    "ultrabounded": _run_ultrabounded,
    "l1_l2": _run_l1_l2,
    "heat_kernel": _run_heat_kernel,
    "beta_profile": _run_beta_profile,
    "uniform_integrability": _run_uniform_integrability,
    "potential": _run_potential,
    "chapman": _run_chapman,
    "backward": _run_backward,
}

_NEEDS_ULTRACONTRACTIVE = {"l1_l2", "heat_kernel", "beta_profile", "uniform_integrability"}


def list_presets():
    return presets.catalog()


def run(manifest, loaded=None):
    """Execute a manifest; returns (exit_status, reports, out_path)."""
    import os

    if loaded is None:
        loaded = load_config(manifest.spec_path)
    unknown = [c for c in manifest.checks if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown check(s) {unknown}; available: {sorted(CHECKS)}")
    for c in manifest.checks:
        if c in _NEEDS_ULTRACONTRACTIVE and not isinstance(loaded.spec.regime, Ultracontractive):
            raise RegimeMismatch(f"check {c!r} needs the Ultracontractive regime")

    out_root = manifest.out_dir
    run_dir = os.path.join(out_root, manifest.content_hash()[:16])
    if os.path.exists(run_dir):
        raise ConfigError(f"output directory {run_dir} already exists; refusing to overwrite")
    os.makedirs(run_dir)

    ctx = _RunContext(loaded, manifest)
    reports = []
    beta_prof = None
    for name in manifest.checks:
        got = CHECKS[name](ctx)
        if name == "beta_profile":
            got, beta_prof = got
        reports.extend(got)

    reporting.write_reports_csv(os.path.join(run_dir, "reports.csv"), reports, manifest.seed)
    reporting.write_summary_json(
        os.path.join(run_dir, "summary.json"),
        reports,
        manifest_info={"hash": manifest.content_hash(), "checks": list(manifest.checks)},
    )
    if beta_prof is not None:
        reporting.write_plot_data(
            os.path.join(run_dir, "beta_profile.dat"),
            beta_prof.epsilons,
            beta_prof.beta_hats,
            header="epsilon beta_hat",
        )
    if ctx._blowup is not None:
        reporting.write_plot_data(
            os.path.join(run_dir, "blowup_sweep.dat"),
            ctx._blowup.deltas,
            ctx._blowup.sups,
            header=f"delta kernel_sup (slope {ctx._blowup.slope:.4f})",
        )
    for key, mu in ctx._measures.items():
        storage.dump_measure(mu, os.path.join(run_dir, f"measure_t{key}.bin"), loaded.spec.digest())
    with open(os.path.join(run_dir, "manifest.json"), "w") as fh:
        json.dump(dataclasses.asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")

    n_fail = sum(1 for r in reports if r.verdict == "fail")
    n_inc = sum(1 for r in reports if r.verdict == "inconclusive")
    status = EXIT_OK if n_fail == 0 and n_inc == 0 else (EXIT_FAIL if n_fail else EXIT_INCONCLUSIVE)
    return status, reports, run_dir


def _build_parser():
    parser = argparse.ArgumentParser(prog="evolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run checks from an operator config file")
    runp.add_argument("config", help="operator spec config (TOML)")
    runp.add_argument("--checks", default="gradient,harnack", help="comma-separated check names")
    runp.add_argument("--samples", type=int, default=20_000)
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--step", type=float, default=2e-3)
    runp.add_argument("--burn-in", type=float, default=0.0, help="0 = spec default 10/|r0|")
    runp.add_argument("--family", type=int, default=8, help="test-family size knob")
    runp.add_argument("--delta-grid", default="0.1,0.15,0.22,0.33,0.5,0.75")
    runp.add_argument("--out", default="evolab-out")
    sub.add_parser("presets", help="list the built-in operator presets")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets":
        for entry in list_presets():
            note = f"  ({entry['note']})" if entry["note"] else ""
            print(f"{entry['name']:10s} regime={entry['regime']:16s} r0={entry['r0']}{note}")
            props = implied_properties(presets.PRESETS[entry["name"]]().regime)
            if props:
                print(f"{'':10s} implies: {', '.join(props)}")
        return EXIT_OK
    try:
        loaded = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = RunManifest(
        spec_path=args.config,
        spec_hash=loaded.content_hash,
        checks=tuple(c.strip() for c in args.checks.split(",") if c.strip()),
        samples=args.samples,
        seed=args.seed,
        step=args.step,
        burn_in=args.burn_in,
        family_size=args.family,
        delta_grid=tuple(float(v) for v in args.delta_grid.split(",")),
        out_dir=args.out,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"),
    )
    try:
        status, reports, run_dir = run(manifest, loaded)
    except (ConfigError, RegimeMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowupError, ExpMomentDiverged, FitIllConditioned, QuadratureFailure) as exc:
        print(f"estimator error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for r in reports:
        print(r)
    print(f"artifacts: {run_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
