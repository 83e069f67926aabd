"""Exception types shared across the package."""


class FockLensError(Exception):
    """Base class for all package-specific errors."""


class TailLeak(FockLensError):
    """Probability mass reached the edge of the photon-number window."""


class OutOfWindow(FockLensError):
    """A requested photon number lies outside the state's window."""


class NoConvergence(FockLensError):
    """An iterative solver failed to converge within its budget."""


class DomainError(FockLensError):
    """An argument violates a mathematical precondition."""


class JumpOverflow(FockLensError):
    """A trajectory produced more quantum jumps than the sanity bound."""


class RangeError(FockLensError):
    """Input exceeds the stability range of a closed-form recurrence."""


class ParseError(FockLensError):
    """A configuration document is malformed."""


class UnknownKey(ParseError):
    """A configuration document contains a key not in the schema."""


class RangeViolation(ParseError):
    """A configuration value is outside its allowed range."""
