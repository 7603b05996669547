"""Exception hierarchy shared by all modules."""


class DDILabError(Exception):
    """Base class for every error raised by ddilab."""


class DomainError(DDILabError, ValueError):
    """Argument outside the domain of a formula."""


class ParameterError(DomainError):
    """Model parameters violate their invariants."""


class SingularityError(DomainError):
    """Evaluation at a point where the map is not differentiable."""


class StateNotFoundError(DDILabError):
    """A requested steady state does not exist for these parameters."""


class RegimeError(DDILabError):
    """Parameters lie outside the regime where the object exists."""


class RangeError(DomainError):
    """Energy level outside the open admissible interval."""


class BelowCriticalError(DDILabError):
    """Requested pattern length is at or below the critical value."""

    def __init__(self, message, max_modes=None):
        super().__init__(message)
        self.max_modes = max_modes


class AccuracyError(DDILabError):
    """A quadrature or root solve missed its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class GluingInfeasibleError(DDILabError):
    """Two consecutive phase-plane curves of a segment plan do not meet."""


class PlanError(DDILabError):
    """A segment plan is malformed or does not close on the axis."""


class PositivityError(DomainError):
    """Sturm-Liouville weight is not strictly positive."""


class ResolutionError(DDILabError):
    """Richardson extrapolation did not settle."""


class NearSingularError(DomainError):
    """Spectral parameter too close to an eigenvalue of the kinetic block."""


class StiffnessError(DDILabError):
    """Adaptive step size underflow."""


class IntegratorError(DDILabError):
    """Integrator produced inadmissible values."""


class SolverError(DDILabError):
    """Linear solve breakdown in the PDE stepper."""


class BlowUpError(DDILabError):
    """Non-finite values in a simulation."""


class UsageError(DDILabError):
    """Bad configuration or command line."""
