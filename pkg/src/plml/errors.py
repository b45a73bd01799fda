"""Exception types shared across the package.

The split matters for the command line tool, which maps each type to a
distinct exit code: ContractError means the caller asked for something
impossible (bad shapes, bad config), DataError means an input file could
not be read or parsed, SolverError means an optimizer failed numerically.
"""


class PlmlError(Exception):
    """Base class for everything raised deliberately by this package."""


class ContractError(PlmlError, ValueError):
    """A precondition on arguments or configuration was violated."""


class DataError(PlmlError):
    """An input file is missing, unreadable, or malformed."""


class SolverError(PlmlError):
    """An optimizer produced non-finite values or failed to make progress."""
