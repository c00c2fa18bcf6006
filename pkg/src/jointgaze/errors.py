"""Exception types shared across the toolkit."""


class JointGazeError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(JointGazeError):
    """An input file or manifest does not match the expected schema."""


class DataError(JointGazeError):
    """Well-formed input carried invalid values (bad rows, underflow, non-finite numbers)."""


class SessionError(JointGazeError):
    """A session-level invariant is violated (roster, grid, or interval problems)."""
