"""Exception types shared by all heatlab modules."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class RangeError(OverflowError):
    """A requested scalar output cannot be represented in double precision."""


class NumericalFailure(RuntimeError):
    """A solver or internal consistency check broke down."""
