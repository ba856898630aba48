"""Exception types shared across the package."""


class DomainError(ValueError):
    """A state or parameter lies outside the domain of an operation."""


class ConeSingularityError(DomainError):
    """A point lies on or outside the future cone T^2 - X^2 - Y^2 > 0."""


class ChartError(DomainError):
    """A point falls outside a coordinate chart or onto a chart degeneracy."""


class SingularSystemError(DomainError):
    """A linear system needed by a closed-form solution is singular."""


class UndefinedAngleError(DomainError):
    """An angle is requested where it has no value (origin, pole)."""


class SurfaceConstructionError(DomainError):
    """A spanning surface for a loop could not be built inside the valid region."""


class DiscretizationError(ValueError):
    """A sampling grid is too coarse or too short for the requested accuracy."""


class IntegrationError(RuntimeError):
    """Numerical integration could not continue.

    Attributes
    ----------
    t, state : the last accepted time and state.
    """

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class PoleError(IntegrationError):
    """The p-theta flow reached the coordinate singularity |p| = 1."""
