"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LatlogError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LatlogError):
    """Syntax or resolution error in a clause or graph file."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class ValidationError(LatlogError):
    """A parsed program violates a well-formedness rule."""


class StratificationError(ValidationError):
    """No rank assignment exists for the clause sequence."""


class LatticeError(LatlogError):
    """Invalid lattice construction or value."""


class RegistryError(LatlogError):
    """Invalid function registration."""


class MonotonicityError(RegistryError):
    """A registered function failed the monotonicity check."""

    def __init__(self, name: str, position: int, low, high, f_low, f_high):
        self.counterexample = (position, low, high, f_low, f_high)
        super().__init__(
            f"function {name!r} is not monotone in argument {position}: "
            f"{low!r} <= {high!r} but {f_low!r} !<= {f_high!r}"
        )


class SolverInvariantError(LatlogError):
    """Internal invariant of the solve run was violated (bug or misuse)."""


class UnsupportedInstanceError(LatlogError):
    """The reference evaluator cannot handle this instance shape."""


class OracleSizeError(UnsupportedInstanceError):
    """Instance exceeds the size guard of a reference evaluator."""
