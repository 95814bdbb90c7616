"""Exception types shared across the package.

The CLI maps these onto its exit codes: bad input -> 2, decision answered
"no" -> 3, budget exhaustion -> 4.
"""


class NetclearError(Exception):
    """Base class for all package errors."""


class InvalidInputError(NetclearError):
    """Malformed market, file, or parameter (CLI exit code 2)."""


class InvalidCompressionError(InvalidInputError):
    """Compression violates bounds or the flow condition."""


class NegativeEndowmentError(InvalidInputError):
    """Operation requires nonnegative endowments."""


class MalformedProblemError(InvalidInputError):
    """LP/MILP references undeclared variables or has inverted bounds."""


class FormulaOutOfScopeError(InvalidInputError):
    """Formula violates the occurrence bounds of the gadget construction."""


class OddSumError(InvalidInputError):
    """Partition gadget needs an even value sum."""


class NonIntegralAfterScalingError(InvalidInputError):
    """Chosen scale does not make all liabilities integral."""


class DisconnectedExhaustionError(InvalidInputError):
    """Edge list cannot yield the requested number of sampled banks."""


class BudgetExceededError(NetclearError):
    """Search budget exhausted (CLI exit code 4)."""


class NodeBudgetExceededError(BudgetExceededError):
    """Branch-and-bound node cap or time budget hit before optimality."""
