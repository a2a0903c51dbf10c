"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures to documented process exit codes without a lookup table.
"""


class WorkloadError(Exception):
    """Base class for all analysis failures."""

    exit_code = 6


class ConfigInvalid(WorkloadError, ValueError):
    exit_code = 5


class Reducible(ConfigInvalid):
    """The transition matrix has no unique stationary distribution."""


class Unstable(WorkloadError):
    """Stability margin is not positive."""

    exit_code = 2

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class MultipleRoot(WorkloadError):
    """A root cluster was detected where simple roots are required."""

    exit_code = 3


class MultiplePole(MultipleRoot):
    pass


class InversionFailure(WorkloadError):
    exit_code = 4


class NewtonDivergence(InversionFailure):
    pass


class QuadratureFailure(InversionFailure):
    pass


class ZeroPolynomial(WorkloadError, ValueError):
    pass


class BranchViolation(WorkloadError, ValueError):
    """A transform with a branch cut was requested at Re(s) < 0."""


class RootCountMismatch(WorkloadError):
    pass


class NullspaceDim(WorkloadError):
    pass


class SingularSystem(WorkloadError):
    pass


class CancellationFailure(WorkloadError):
    pass


class DegenerateRoot(WorkloadError):
    pass


class BasisDeficiency(WorkloadError):
    pass


class NotPoisson(WorkloadError, ValueError):
    pass
