"""Exception types raised by the library.

Each numerical failure mode has its own class so the CLI can map it to a
stable error name (``exc.code``).
"""


class GencsError(Exception):
    code = "error"


class InputError(GencsError, ValueError):
    code = "input-error"


class ConfigurationError(GencsError):
    code = "configuration-error"


class DecompositionBreakdown(GencsError, ArithmeticError):
    """The Gauss (normal-ordered) splitting does not exist for this element."""

    code = "decomposition-breakdown"


class IntegrationError(GencsError, ArithmeticError):
    code = "integration-error"


class BranchError(GencsError, ArithmeticError):
    """A matrix log/sqrt hit an eigenvalue on the branch cut."""

    code = "branch-error"


class CutoffError(GencsError):
    code = "cutoff-error"


class StalledManifold(GencsError, ArithmeticError):
    code = "stalled-manifold"
