"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Malformed inputs: dimension mismatches, non-monotone curves, bad index sets."""


class TooLarge(ValueError):
    """An exact/exhaustive operation was asked to run beyond its size guard."""


class InvalidSize(ValueError):
    """Instance generator called with dimensions below its minimum."""


class ParseError(ValueError):
    """Malformed model file. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedCardinality(ParseError):
    """Model file declares a variable with a domain other than {0,1}."""
