"""Exception hierarchy. `exit_code` is what the CLI returns for the error class."""


class PmdNavError(Exception):
    exit_code = 1


class ValidationError(PmdNavError):
    """Malformed input documents, bad identifiers, out-of-range values."""

    exit_code = 1


class InfeasibleError(PmdNavError):
    """A well-formed query that cannot be satisfied with the given data."""

    exit_code = 2


class DisconnectedError(InfeasibleError):
    """No path between the requested endpoints."""


class SamplingError(InfeasibleError):
    """Could not draw enough feasible origin-destination pairs."""

    def __init__(self, message: str, achieved: int = 0):
        super().__init__(message)
        self.achieved = achieved


class CensoredError(InfeasibleError):
    """A simulation hit its time cap before every agent arrived."""
