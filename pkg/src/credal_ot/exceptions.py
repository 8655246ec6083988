"""Exception hierarchy shared by the library and the command line tool."""


class CredalOTError(Exception):
    """Base class for every error raised by :mod:`credal_ot`."""

    exit_code = 1
    kind = "internal-error"


class InputError(CredalOTError, ValueError):
    """Malformed input: bad shapes, invalid events, schema violations."""

    exit_code = 2
    kind = "input-error"


class DomainError(CredalOTError, ValueError):
    """Well-formed input outside the mathematical domain of an operation."""

    exit_code = 3
    kind = "domain-error"


class SizeError(CredalOTError, ValueError):
    """Instance exceeds an enumeration cap."""

    exit_code = 4
    kind = "size-error"


class SolverError(CredalOTError, RuntimeError):
    """A solver failed on an input it should have handled."""

    exit_code = 1
    kind = "internal-error"
