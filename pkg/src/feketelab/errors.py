"""Exception hierarchy; the CLI maps these onto exit codes."""


class FeketeError(Exception):
    """Base class for library errors."""


class InvalidInput(FeketeError, ValueError):
    """Rejected user input (non-unitary matrix, unparsable literal, ...)."""


class DegenerateMapError(FeketeError, ValueError):
    """The lift has vanishing (or numerically vanishing) resultant."""


class NumericFailure(FeketeError, ArithmeticError):
    """A numerical kernel failed to converge or lost consistency."""


class BudgetError(FeketeError):
    """The request exceeds a size budget (atoms, coefficients)."""
