"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when user-supplied data fails a precondition."""


class InvariantError(ValueError):
    """Raised when a structural invariant of a domain value is violated."""


class IntegrationError(RuntimeError):
    """Raised when an ODE integration cannot be continued.

    The partially computed trajectory (up to the last accepted state) is
    attached as ``trajectory`` so callers can inspect or save it.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
