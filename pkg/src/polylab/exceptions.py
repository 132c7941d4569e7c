"""Exception types raised across polylab."""


class PolylabError(Exception):
    """Base class for all polylab errors."""


class InvalidStateError(PolylabError, ValueError):
    """A vector or matrix does not describe a valid quantum state."""


class InvalidPartitionError(PolylabError, ValueError):
    """A requested subsystem split is empty, total, or refers to unknown qubits."""


class DimensionError(PolylabError, ValueError):
    """Operands have incompatible or unsupported dimensions."""


class DomainError(PolylabError, ValueError):
    """The (q, s) pair (or an argument) lies outside the range where a result holds.

    ``inequality`` names the violated condition so callers can report it.
    """

    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality
