class InputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class SolverError(RuntimeError):
    """A prox solve failed to certify its gap within the iteration budget.

    ``best`` is the best iterate found and ``gap`` its certified gap (may be inf).
    """

    def __init__(self, message, best=None, gap=float("inf")):
        super().__init__(message)
        self.best = best
        self.gap = gap


class InfeasibleError(SolverError):
    """The objective is +inf everywhere the solver looked."""


class ConfigError(ValueError):
    """Malformed experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
        self.message = message
