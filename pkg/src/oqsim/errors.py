"""Exception types raised by the simulation engines."""


class OQSimError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(OQSimError):
    """Operator shapes are inconsistent or exceed the configured maximum."""


class NumericError(OQSimError):
    """Non-finite input or a numerically violated structural identity."""


class PositivityError(OQSimError):
    """A matrix required to be positive semi-definite is not."""


class FrequencyError(OQSimError):
    """A bath table lacks an entry for a requested Bohr frequency."""


class DegeneracyError(OQSimError):
    """The Hamiltonian spectrum is degenerate where non-degeneracy is required."""


class SizeLimitError(OQSimError):
    """Problem size exceeds what the dense solvers are willing to attempt."""


class IntegrationError(OQSimError):
    """Adaptive time stepping failed (step underflow or rejected solution)."""


class KrausError(OQSimError):
    """A Kraus operator family violates the completeness condition."""


class ConvergenceError(OQSimError):
    """An iterative procedure did not converge within its budget."""
