"""Exception types raised across the package."""


class SylvanError(Exception):
    """Base class for all package errors."""


class ParameterError(SylvanError, ValueError):
    """Invalid generator parameters."""


class DomainError(SylvanError, ValueError):
    """A query falls outside the domain where the operation is defined."""


class ConsistencyError(SylvanError):
    """Inputs disagree with each other (unknown ids, duplicates, mismatched frames)."""


class FormatError(SylvanError, ValueError):
    """A file or record does not follow the expected schema."""


class ConfigurationError(SylvanError):
    """A configuration cannot be satisfied (e.g. too few scenes to split)."""
