"""Exception types shared across the package.

The CLI maps these onto exit codes: input/format problems exit 2, numeric
failures exit 3.
"""


class SgkError(Exception):
    """Base class for all package-specific errors."""


class EmptyGraphError(SgkError, ValueError):
    """An operation received a graph with no nodes."""


class InvalidCovarianceError(SgkError, ValueError):
    """A covariance triple or matrix violates positive-semidefiniteness."""


class NumericError(SgkError, ArithmeticError):
    """A linear-algebra routine failed beyond recoverable jitter."""


class DatasetError(SgkError):
    """Base class for dataset loading/validation failures."""

    def __init__(self, message, filename=None):
        super().__init__(message if filename is None else f"{filename}: {message}")
        self.filename = filename


class HashMismatchError(DatasetError):
    """A binary payload does not match the hash recorded in the manifest."""


class TruncatedFileError(DatasetError):
    """A binary payload is shorter than its header promises."""


class BadMagicError(DatasetError):
    """A binary payload does not start with the expected magic bytes."""


class IndexRangeError(DatasetError):
    """An index (edge endpoint, label, split member) is out of range."""


class ManifestError(DatasetError):
    """meta.json is missing, unparseable, or inconsistent with the payloads."""
