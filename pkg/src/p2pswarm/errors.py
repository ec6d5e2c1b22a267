"""Exception types shared across the package."""


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


class DomainError(ValueError):
    """Arguments lie outside the domain where a formula is defined."""


class DivergenceError(DomainError):
    """A moment or bound is infinite for the given load."""


class ResourceCapError(RuntimeError):
    """A simulation exceeded its configured memory cap."""

    def __init__(self, message, population=None):
        super().__init__(message)
        self.population = population


class TruncationError(RuntimeError):
    """Probability mass leaking out of a truncated state space is too large."""

    def __init__(self, message, leak=None):
        super().__init__(message)
        self.leak = leak
