"""evolab: a Monte Carlo laboratory for nonautonomous Markov evolution operators.

Simulates the diffusion generated by Tr(Q(t) D^2) + <b(t,x), grad>, estimates
the two-parameter evolution operator G(t,s), its gradient and transition
kernel, and the tight evolution system of measures, and verifies the
quantitative smoothing estimates (gradient bounds, log-Sobolev inequalities,
Harnack estimates, super/ultra contractivity norm bounds, heat-kernel sup
bounds) against their explicit constants and a closed-form
Ornstein-Uhlenbeck reference.
"""

__version__ = "0.1.0"

from .engine import Ensemble, McEstimate, PathConfig, SeedLineage, apply, simulate
from .expressions import parse_drift_expression
from .operators import (
    Hyper,
    HypothesisReport,
    LyapunovSpec,
    OperatorSpec,
    PotentialSpec,
    Ultrabounded,
    Ultracontractive,
)

__all__ = [
    "Ensemble",
    "Hyper",
    "HypothesisReport",
    "LyapunovSpec",
    "McEstimate",
    "OperatorSpec",
    "PathConfig",
    "PotentialSpec",
    "SeedLineage",
    "Ultrabounded",
    "Ultracontractive",
    "apply",
    "parse_drift_expression",
    "simulate",
    "__version__",
]
