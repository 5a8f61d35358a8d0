"""Exception types shared across the package."""


class JacobiFemError(Exception):
    """Base class for all package errors."""


class ParameterError(JacobiFemError, ValueError):
    """An argument violates a documented precondition."""


class IntegrabilityError(JacobiFemError, ValueError):
    """A requested weighted integral does not converge."""


class GeometryError(JacobiFemError, ValueError):
    """An element is degenerate or not a parallelogram."""


class ConformityError(JacobiFemError, ValueError):
    """The mesh has hanging nodes or inconsistent edge sharing."""


class OrientationError(JacobiFemError, ValueError):
    """An element's vertices are not ordered counter-clockwise."""


class SolverError(JacobiFemError, RuntimeError):
    """The linear solve failed or did not reach the residual tolerance."""
