class TransferError(Exception):
    """Base class for every error raised by the simulation engine."""


class DomainError(TransferError, ValueError):
    """Input outside the physical domain of the protocol (e.g. R=1 with cancellation gain)."""


class RegistryError(DomainError):
    """Malformed basis-mode registry: duplicate ids, unmatched EPR halves, unknown ids."""


class RegistryMismatchError(DomainError):
    """Expressions or states built over different registries were combined."""


class PhysicalityError(DomainError):
    """An expression or covariance violates the canonical commutation relations."""


class ConsistencyError(TransferError):
    """A closed-form prediction disagrees with the value computed from the circuit."""


class UsageError(TransferError):
    """Invalid or inconsistent command-line flags."""


class OutputError(TransferError):
    """A result file could not be written."""
