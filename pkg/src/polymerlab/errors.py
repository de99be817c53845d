"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: DomainError -> 1, CapabilityError -> 2.
"""


class PolymerlabError(Exception):
    """Base class for errors raised by this package."""


class DomainError(PolymerlabError, ValueError):
    """An argument or model is outside the domain an operation accepts."""


class CapabilityError(PolymerlabError, RuntimeError):
    """The request is well-posed but this engine cannot honour it
    (unsupported correlation range, enumeration budget, memory guard...)."""


class NumericalError(PolymerlabError, RuntimeError):
    """A numerical routine failed to reach its accuracy contract."""
