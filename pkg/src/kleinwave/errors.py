"""Exception hierarchy shared by all kleinwave modules."""


class KleinwaveError(Exception):
    """Base class for every error raised by the library."""

    module = "kleinwave"


class InputError(KleinwaveError, ValueError):
    """Malformed or non-finite input data."""


class DomainError(InputError):
    """Evaluation point outside the domain of a sampled object."""


class CompatibilityError(InputError):
    """Boundary data violate a compatibility condition (e.g. alpha_0 != beta_0)."""


class CapacityError(KleinwaveError):
    """A requested order exceeds a configured cap or the constructed basis."""


class NumericError(KleinwaveError, ArithmeticError):
    """A numerical procedure failed (non-convergence, stagnation, solver fault)."""


class VanishingFError(NumericError):
    """The particular solution f vanishes (or nearly so) on the grid."""

    module = "spps"


class HaarViolationError(NumericError):
    """The interpolation system of the basis is singular on a reference set."""

    module = "approx"


class ConfigError(KleinwaveError):
    """Invalid solver or CLI configuration."""
