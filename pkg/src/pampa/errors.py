"""Exception hierarchy shared by the solver and the command-line front end."""


class PampaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(PampaError, ValueError):
    """Bad user input: mesh, problem id, flags, incompatible meshes."""


class InvalidStateError(PampaError, ValueError):
    """A state lies outside the domain where the model is defined."""


class BoundViolationError(PampaError):
    """A limiter precondition failed (usually a CFL violation upstream).

    ``location`` is the interface or node index, ``kind`` names the
    quantity that was out of bounds.
    """

    def __init__(self, message, location=None, kind=None, state=None):
        super().__init__(message)
        self.location = location
        self.kind = kind
        self.state = state


class CFLViolationError(PampaError):
    """An inner Runge-Kutta stage needs a smaller time step."""


class SolverAbort(PampaError):
    """The time loop could not continue (retries exhausted, NaNs, ...)."""


class NumericalError(PampaError):
    """An auxiliary nonlinear solve did not converge."""
