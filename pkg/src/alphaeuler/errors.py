"""Exception types shared across the package."""


class AlphaEulerError(Exception):
    """Base class for all package-specific errors."""


class BoundaryConditionViolation(AlphaEulerError):
    """Profile does not satisfy V'(wall)=0 and so cannot be a steady state."""


class NoInflectionPoint(AlphaEulerError):
    """Fjortoft check invoked on a profile without a sign-changing inflection."""


class AssumptionViolated(AlphaEulerError):
    """No single-valued functional relation between stream function and vorticity."""


class AllSingular(AlphaEulerError):
    """U'' vanishes identically; the ratio V/U'' is nowhere defined."""


class DiscretizationMismatch(AlphaEulerError):
    """Analytic and numeric eigenvalue paths disagree beyond tolerance."""


class NoNontrivialSolution(AlphaEulerError):
    """Eigenvalue match failed; the requested construction has no solution."""


class CflViolation(AlphaEulerError):
    """Requested time step exceeds the advective stability bound."""


class NanEncountered(AlphaEulerError):
    """Time stepping produced non-finite values; carries the last valid ledger."""

    def __init__(self, message, ledger=None):
        super().__init__(message)
        self.ledger = ledger


class EigensolverError(AlphaEulerError):
    """Dense generalized eigenvalue solve failed; carries condition diagnostics."""


class ConfigError(AlphaEulerError):
    """Analysis configuration failed validation."""
