"""Exception types shared across the package."""


class ContractError(ValueError):
    """A documented precondition was violated by the caller."""


class ShapeError(ContractError):
    """Operand dimensions do not conform."""


class DomainError(ContractError):
    """Numeric input lies outside an operation's domain."""


class ParseError(ValueError):
    """An external file (CSV, JSON checkpoint) is malformed."""


class TrainingDiverged(RuntimeError):
    """Training hit a non-finite loss; carries the step it happened at."""

    def __init__(self, message: str, step: int, seed: int):
        super().__init__(message)
        self.step = step
        self.seed = seed
