"""Exception hierarchy shared across the package."""


class WarplabError(Exception):
    """Base class for all package errors."""


class ParseError(WarplabError, ValueError):
    """Malformed profile source. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    pass


class NonConstantExponentError(ParseError):
    pass


class DomainError(WarplabError, ValueError):
    """Expression evaluated outside its real domain, or produced a non-finite value."""


class ProfileError(WarplabError, ValueError):
    """Bad builtin name/parameters, or a profile that failed validation."""


class QuadratureError(WarplabError, ArithmeticError):
    pass


class DualPathError(WarplabError, RuntimeError):
    """Two independent computations of the same quantity disagree.

    This always indicates an implementation fault, never bad input.
    """


class RootBracketError(WarplabError, ValueError):
    """No sign change found in a bracket; ``samples`` holds the scanned (x, g(x))."""

    def __init__(self, message, samples=()):
        super().__init__(message)
        self.samples = list(samples)


class IntegrationError(WarplabError, ArithmeticError):
    """Non-finite state in the Jacobi integrator."""
