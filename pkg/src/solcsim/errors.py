"""Exception types shared across the package."""


class SolcError(Exception):
    """Base class for all package-specific errors."""


class ZeroMantissa(SolcError):
    """An all-zero mantissa has no normalized form."""


class DivisorZero(SolcError):
    """The known multiplicand is zero; the inversion is undefined."""


class LayoutMismatch(SolcError):
    """Operand widths or register shapes disagree with the layout."""


class InvalidLayout(SolcError):
    """The layout violates a builder precondition (e.g. unreduced padding)."""


class SlackOverflow(SolcError):
    """The remainder does not fit the slack register width."""


class QuotientOverflow(SolcError):
    """The solved quotient does not fit its register width."""


class TooLarge(SolcError):
    """Problem exceeds an exhaustive-search tractability bound."""


class UnknownNode(SolcError):
    """A gate terminal references a node that is not in the netlist."""


class NonFinite(SolcError):
    """An integrator step produced a non-finite state component."""


class Singular(SolcError):
    """The matrix has zero determinant over the exact rationals."""


class Mismatch(SolcError):
    """Circuit satisfying set and arithmetic oracle disagree."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
