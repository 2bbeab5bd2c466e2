"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible lengths or dimensions."""


class DomainError(ValueError):
    """Input is outside the mathematical domain of the operation."""


class ContractError(ValueError):
    """A documented precondition was violated by the caller."""


class CapacityError(ContractError):
    """An example pool is too small for the requested partition."""


class ConfigError(ValueError):
    """Invalid experiment configuration.

    ``errors`` holds one "field.path: message" string per problem.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NumericalAbort(RuntimeError):
    """A non-finite value was produced during optimization."""
