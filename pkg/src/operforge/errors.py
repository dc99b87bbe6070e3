"""Exception types shared across the library."""


class OperforgeError(Exception):
    """Base class for every error raised by this package."""


class PrecisionExhausted(OperforgeError):
    """A result would need coefficients beyond the certified window."""


class OrderUndetermined(OperforgeError):
    """Every stored coefficient vanishes but the series is not known to be zero,
    so its leading exponent may lie beyond the window."""


class SingularLeadingMatrix(OperforgeError):
    """The leading coefficient matrix is not invertible over Q."""


class NonPositiveValuation(OperforgeError):
    """Matrix exponential of a series with valuation <= 0 that is not nilpotent."""


class NotInAlgebra(OperforgeError):
    """Input matrix does not lie in the configured Lie algebra (e.g. nonzero trace for sl)."""


class NotRegular(OperforgeError):
    """Input matrix is not regular (centralizer dimension exceeds the rank of gl_n)."""


class NotRegularNilpotent(OperforgeError):
    """Input matrix is not regular nilpotent."""


class NotNilpotent(OperforgeError):
    """Input matrix is not nilpotent."""


class OrderTooLarge(OperforgeError):
    """The connection's pole order is too mild for the requested normalization (needs order < -1)."""


class SolverDegenerate(OperforgeError):
    """A per-step linear system lost surjectivity; the slice decomposition failed."""


class NilpotencyViolation(OperforgeError):
    """A leading term that must be nilpotent by the membership property came out
    non-nilpotent.  This indicates an implementation bug, never a valid state."""


class SearchExhausted(OperforgeError):
    """A bounded witness search ran out of candidates.  Signals insufficient
    bounds, never nonexistence."""

    def __init__(self, message, candidates_tried=0, bounds=None):
        super().__init__(message)
        self.candidates_tried = candidates_tried
        self.bounds = bounds


class InvalidOrder(OperforgeError):
    """The connection's order violates a search precondition."""


class Unstabilized(OperforgeError):
    """A truncated dimension computation did not agree across two window depths."""


class SchemaError(OperforgeError):
    """Input document violates the JSON schema.  Carries a JSON-pointer path."""

    def __init__(self, path, message):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path or "/"
        self.reason = message
