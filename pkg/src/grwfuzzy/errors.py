class GrwFuzzyError(Exception):
    """Base class for package errors."""


class DegenerateStateError(GrwFuzzyError):
    """A state or hit with zero total mass where a normalizable one is required."""


class CapacityError(GrwFuzzyError):
    """Dense expansion requested beyond the configured limit."""


class ShapeError(GrwFuzzyError):
    """Subsystem rosters or indices that do not line up."""


class ValidationError(GrwFuzzyError, ValueError):
    """A parameter outside its admissible range."""
