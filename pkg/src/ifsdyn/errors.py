"""Exception hierarchy shared by every module."""


class IfsError(Exception):
    """Base class for all ifsdyn errors."""


class ConfigurationError(IfsError):
    """A system, grid or run configuration is invalid."""


class DomainViolationError(IfsError):
    """A point lies outside the declared domain of a map."""

    def __init__(self, map_name, point):
        self.map_name = map_name
        self.point = point
        super().__init__(f"point {point!r} is outside the domain of map {map_name!r}")


class InvalidWordError(IfsError):
    """An index word refers to a map that does not exist."""


class DegenerateInputError(IfsError):
    """A box or interval has zero extent."""


class GridMismatchError(IfsError):
    """Operands live on different grids."""


class EmptySetError(IfsError):
    """A metric operation received an empty cell set."""


class PreconditionError(IfsError):
    """An operation was called with inputs that violate its precondition."""


class ResolutionError(IfsError):
    """The requested tolerance cannot be resolved on the grid."""
