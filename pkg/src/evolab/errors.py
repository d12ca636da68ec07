"""Exception taxonomy shared across the package.

Every failure mode that a caller is expected to branch on gets its own
class; anything else is allowed to surface as a plain ValueError.
"""


class EvolabError(Exception):
    """Base class for all package-specific errors."""


# --- drift expression grammar -------------------------------------------------

class ExpressionSyntaxError(EvolabError):
    """Malformed drift expression. Carries the byte offset of the offending token."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ArityError(EvolabError):
    """Component count of a drift expression does not match the dimension."""


class UnknownIdentifier(EvolabError):
    """Unrecognized variable or function name in an expression."""

    def __init__(self, name, offset):
        super().__init__(f"unknown identifier '{name}' (at byte offset {offset})")
        self.name = name
        self.offset = offset


class DomainEvalError(EvolabError):
    """Evaluation outside the expression's domain (log/sqrt of nonpositive, x/0)."""


# --- operator hypotheses ------------------------------------------------------

class SymmetryViolation(EvolabError):
    """Diffusion matrix is not symmetric within tolerance at a sampled time."""


class NotConvex(EvolabError):
    """Candidate envelope function failed the sampled convexity/monotonicity check."""


class TailNotIntegrable(EvolabError):
    """1/h fails the numerical tail-integrability check at +infinity."""


class RegimeMismatch(EvolabError):
    """Operation requires a drift regime the spec does not certify."""


# --- simulation / estimation --------------------------------------------------

class BlowupError(EvolabError):
    """Divergent-path fraction exceeded the tolerated budget."""

    def __init__(self, message, divergent, total):
        super().__init__(message)
        self.divergent = divergent
        self.total = total


class DimensionTooHigh(EvolabError):
    """Kernel density estimation requested above the supported dimension."""


class ExpMomentDiverged(EvolabError):
    """An exponential moment failed to stabilize; treated as divergent."""


class QuadratureFailure(EvolabError):
    """Adaptive quadrature did not reach the requested tolerance."""


class UnsupportedFunction(EvolabError):
    """Test function outside the closed-form class of the reference process."""


class NotConstantCoefficient(EvolabError):
    """Operation requires constant coefficients."""


class DegenerateExponents(EvolabError):
    """Norm-bound constants need 1 < p < q."""


class FitIllConditioned(EvolabError):
    """Too few or unusable points for a stable least-squares fit."""


# --- configuration / CLI ------------------------------------------------------

class ConfigError(EvolabError):
    """Malformed or inconsistent operator configuration file."""
