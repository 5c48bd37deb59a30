"""Exception types shared across the package."""


class KnotPiError(Exception):
    """Base class for all package errors."""


class ParseError(KnotPiError):
    """Malformed process, formula, or DT-code text."""


class BadParity(ParseError):
    """A DT code entry with odd magnitude."""


class NotPermutation(ParseError):
    """DT code magnitudes are not exactly {2, 4, ..., 2n}, or the derived
    pairing is not a parity-reversing involution."""


class EmptyCode(ParseError):
    """Empty DT code input."""


class AdjacencyInconsistent(KnotPiError):
    """Wire deduplication left a port with a wire count different from 1."""


class StateBudgetExceeded(KnotPiError):
    """State-space exploration hit its max_states budget.

    Carries the partial reachable set in `partial`.
    """

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class InterfaceTooLarge(KnotPiError):
    """Requested shared interface exceeds an abstraction's arity."""


class SiteMismatch(KnotPiError):
    """Move-site anchors do not match the required local shape."""


class NoWireToCut(KnotPiError):
    """Knot composition needs at least one wire in each operand."""
