"""Shared exception types."""


class DeskBoundError(ValueError):
    """A requested object exceeds the fixed desk-scale bounds."""


class PrecisionExhausted(ArithmeticError):
    """A computation needed more p-adic digits than the working precision."""


class ResidueObstruction(ArithmeticError):
    """A residue-level twisted equation has no solution at this field level."""


class NonGaloisLayer(ValueError):
    """A ramified layer failed Galois verification; conjugation is refused."""


class SupersingularError(ValueError):
    """Ordinary reduction is required: the Frobenius trace is divisible by p."""


class LiftBudgetExceeded(ArithmeticError):
    """The backtracking unit-lift search ran out of its node budget."""
