"""Exception types shared across the package."""

from __future__ import annotations


class PpsolveError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PpsolveError):
    """A system or model failed validation; carries the violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ParseError(ValidationError):
    """A text input could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        self.message = where + message
        Exception.__init__(self, self.message)
        self.violations = [self.message]


class PolicyError(PpsolveError):
    """A policy does not match the system it is applied to."""


class PreconditionError(PpsolveError):
    """An operation was invoked outside its stated precondition."""


class SolverFault(PpsolveError):
    """The numerical core hit a state that theory rules out.

    Signals an upstream bug (e.g. unpruned value-1 coordinates or a
    non-LDF start), never an expected numerical condition.
    """


class SingularMatrixError(SolverFault):
    def __init__(self, column: int):
        self.column = column
        super().__init__(f"singular linear system (pivot column {column})")


class EnumerationBudgetExceeded(PpsolveError):
    """A bounded policy-enumeration oracle ran out of budget."""
