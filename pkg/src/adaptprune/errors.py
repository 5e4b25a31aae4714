class ValidationError(ValueError):
    """Raised when input data or configuration violates a documented invariant."""


class DumpFormatError(ValueError):
    """Raised when a token dump is structurally malformed (bad magic, version,
    truncation, or a length that disagrees with the header)."""
