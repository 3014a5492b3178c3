"""Exception types raised across the package.

Every exception carries a short ``code`` (the class name) so the command
line front end can print ``ERROR <code>: <message>`` on a single line.
"""


class SubsumError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class DuplicateItem(SubsumError, ValueError):
    pass


class InvalidCost(SubsumError, ValueError):
    pass


class InvalidSelection(SubsumError, ValueError):
    pass


class InvalidParam(SubsumError, ValueError):
    pass


class ZeroVector(SubsumError, ValueError):
    pass


class AlreadySelected(SubsumError, ValueError):
    pass


class Unsupported(SubsumError, ValueError):
    """Model/algorithm pair not allowed by the compatibility matrix."""


class TooLarge(SubsumError, ValueError):
    pass


class ParseError(SubsumError, ValueError):
    pass


class FormatError(SubsumError, ValueError):
    pass


class InvalidFeature(SubsumError, ValueError):
    pass


class UnknownItem(SubsumError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class InvalidWeight(SubsumError, ValueError):
    pass


class InvalidProbability(SubsumError, ValueError):
    pass


class InvalidSnippet(SubsumError, ValueError):
    pass


class InvalidAnnotation(SubsumError, ValueError):
    pass


class EmptyGroundSet(SubsumError, ValueError):
    pass


class DimensionMismatch(SubsumError, ValueError):
    pass


class BenchInvalid(SubsumError, RuntimeError):
    """Memoized and scratch runs disagreed; points at a memoization bug."""
