"""Exception types shared across the toolkit."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateConfigurationError(ValueError):
    """Geometry is outside the general-position assumptions of a predicate."""


class DomainError(ValueError):
    """A closed-form evaluation was requested outside its domain."""
