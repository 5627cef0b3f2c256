"""Exception hierarchy shared across the package."""


class DecRhoError(Exception):
    """Base class for all package errors."""


class ModelError(DecRhoError, ValueError):
    """A model is malformed or a request does not match its spaces."""


class ZeroLikelihoodError(DecRhoError, ValueError):
    """An observation has zero probability under the current belief."""


class PolicyStructureError(DecRhoError, ValueError):
    """A policy does not fit the model it is applied to, or has dangling edges."""


class BudgetExceededError(DecRhoError, RuntimeError):
    """An exhaustive computation would exceed its configured budget."""


class DpomdpParseError(DecRhoError, ValueError):
    """Base class for `.dpomdp` parse failures.

    ``line`` is 1-based; ``column`` is 1-based or ``None`` when not applicable.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class DpomdpSyntaxError(DpomdpParseError):
    """Lexical or grammatical error in a `.dpomdp` file."""


class DpomdpSemanticError(DpomdpParseError):
    """Well-formed `.dpomdp` input that does not describe a valid model."""
