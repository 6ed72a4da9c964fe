"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: I/O failures exit 1,
validation failures exit 2, numeric aborts exit 3, check failures exit 4.
"""


class ValidationError(ValueError):
    """Bad argument values, malformed configs, dimension mismatches."""


class NumericsError(RuntimeError):
    """Non-finite loss or gradient encountered; carries a state snapshot."""

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot
